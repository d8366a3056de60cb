#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskshare/nn/mlp.hpp"

namespace maskshare::nn {

// Parameter checkpoint format (little-endian binary):
//   bytes 0..3   magic "MSL1"
//   u32          layer count L (number of entries in layer_sizes)
//   u32 * L      layer sizes
//   then, for each transition l = 0..L-2:
//     f64 * (out*in)  weight matrix, row-major (out x in)
//     f64 * out       bias vector
// Values are written bitwise, so re-saving an unchanged network reproduces
// identical bytes. Activation and head type are not stored; the loader takes
// them from the caller (checkpoints live next to the config that created them).
std::vector<std::uint8_t> serialize_mlp(const Mlp& net);
Mlp deserialize_mlp(const std::vector<std::uint8_t>& bytes,
                    Activation hidden_activation, OutputHead output_head);

void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path, Activation hidden_activation,
             OutputHead output_head);

}  // namespace maskshare::nn
