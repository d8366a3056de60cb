#include "maskshare/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "maskshare/util/errors.hpp"

namespace maskshare::nn {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'L', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
  }
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > bytes.size()) throw ContractError("truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }

  double f64() {
    if (pos + 8 > bytes.size()) throw ContractError("truncated checkpoint");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_mlp(const Mlp& net) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
  for (const int s : net.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    for (const double w : net.weights[t]) put_f64(out, w);
    for (const double b : net.biases[t]) put_f64(out, b);
  }
  return out;
}

Mlp deserialize_mlp(const std::vector<std::uint8_t>& bytes,
                    Activation hidden_activation, OutputHead output_head) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ContractError("bad checkpoint magic; expected MSL1");
  }
  Reader r{bytes, 4};
  const std::uint32_t layers = r.u32();
  Mlp net;
  net.hidden_activation = hidden_activation;
  net.output_head = output_head;
  net.layer_sizes.resize(layers);
  for (std::uint32_t i = 0; i < layers; ++i) {
    net.layer_sizes[i] = static_cast<int>(r.u32());
  }
  const int transitions = static_cast<int>(layers) - 1;
  net.weights.resize(transitions);
  net.biases.resize(transitions);
  for (int t = 0; t < transitions; ++t) {
    const std::size_t wn =
        static_cast<std::size_t>(net.layer_sizes[t + 1]) * net.layer_sizes[t];
    net.weights[t].resize(wn);
    for (std::size_t i = 0; i < wn; ++i) net.weights[t][i] = r.f64();
    net.biases[t].resize(net.layer_sizes[t + 1]);
    for (auto& b : net.biases[t]) b = r.f64();
  }
  if (r.pos != bytes.size()) throw ContractError("trailing bytes in checkpoint");
  return net;
}

void save_mlp(const Mlp& net, const std::string& path) {
  const auto bytes = serialize_mlp(net);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ContractError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

Mlp load_mlp(const std::string& path, Activation hidden_activation,
             OutputHead output_head) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContractError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize_mlp(bytes, hidden_activation, output_head);
}

}  // namespace maskshare::nn
