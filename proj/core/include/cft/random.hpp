#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cft {

// Source of uniform draws on [0,1). Mobility only ever needs this much, and
// keeping it abstract lets tests substitute degenerate sequences.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual double unit() = 0;

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  // Uniform on [-1, 1).
  double symmetric() { return 2.0 * unit() - 1.0; }
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
};

// mt19937_64 with a portable double conversion (top 53 bits), so streams are
// identical across standard libraries.
class Rng final : public RandomSource {
 public:
  explicit Rng(std::uint64_t seed);
  // Stream keyed by several integers, e.g. {seed, grid point, purpose}.
  Rng(std::initializer_list<std::uint64_t> keys);

  double unit() override;
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Always returns the same value. Handy for the gamma == 0 / gamma == 1 cases.
class ConstantSource final : public RandomSource {
 public:
  explicit ConstantSource(double value) : value_(value) {}
  double unit() override { return value_; }

 private:
  double value_;
};

// Stable 64-bit key for a floating grid value (rho, R, ...).
std::uint64_t grid_key(double value);

}  // namespace cft
