#include "cft/random.hpp"

#include <cmath>
#include <vector>

namespace cft {

std::uint64_t RandomSource::index(std::uint64_t n) {
  if (n == 0) return 0;
  auto k = static_cast<std::uint64_t>(unit() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng::Rng(std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * keys.size());
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t grid_key(double value) {
  return static_cast<std::uint64_t>(std::llround(value * 1e6));
}

}  // namespace cft
