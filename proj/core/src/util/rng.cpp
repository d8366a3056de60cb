#include "maskshare/util/rng.hpp"

#include <cmath>

#include "maskshare/util/errors.hpp"

namespace maskshare::util {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(base);
  for (const char c : label) {
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  }
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

int Rng::uniform_int(int n) {
  if (n <= 0) {
    throw ConfigError("Rng::uniform_int requires n > 0");
  }
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x = next_u64();
  while (x >= limit) {
    x = next_u64();
  }
  return static_cast<int>(x % range);
}

}  // namespace maskshare::util
