#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace cft {

// Gamma(mu, z) = integral from z to infinity of exp(-x) x^(mu-1) dx.
double upper_incomplete_gamma(double mu, double z);
// Gamma(mu, z) / Gamma(mu).
double regularized_upper_gamma(double mu, double z);

// Piecewise-constant fading index. Segment k applies from `from` up to the
// next segment's `from`; the last one holds for all larger distances.
struct MuProfile {
  struct Segment {
    double from;
    double mu;
  };
  std::vector<Segment> segments{{0.0, 1.0}, {90.5, 0.74}, {230.7, 0.84}};

  double at(double d) const;
  void validate() const;
};

struct ChannelParams {
  double pt = 0.2;  // W
  double gt = 1.0, gr = 1.0;
  double ht = 1.0, hr = 1.0;  // m
  double loss = 1.0;
  double alpha = 4.0;
  double nr = 2.5118864315095823e-13;  // W, -96 dBm
  MuProfile mu_profile;

  void validate() const;
};

struct RateTable {
  std::vector<double> rates;       // bit/s, ascending
  std::vector<double> thresholds;  // linear SNR, ascending

  void validate() const;
};

struct RateDistribution {
  double p_zero = 1.0;
  std::vector<double> p;
  double expected_rate = 0.0;  // bit/s
};

double mean_power(double d, const ChannelParams& params);
double mu_for_distance(double d, const MuProfile& profile);
double snr_cdf(double x, double d, const ChannelParams& params);
RateDistribution rate_distribution(double d, const ChannelParams& params, const RateTable& table);
double expected_rate(double d, const ChannelParams& params, const RateTable& table);

// E(c) tabulated on a fixed distance grid; lookups snap to the nearest node.
// Immutable after construction, so it can be shared between threads.
class RateCurve {
 public:
  RateCurve(ChannelParams params, RateTable table, double max_distance, double step = 0.05);

  double operator()(double d) const;
  double step() const { return step_; }
  // Grid node for d, or npos beyond the tabulated range.
  std::size_t node(double d) const;
  std::size_t size() const { return values_.size(); }
  double at_node(std::size_t i) const { return values_[i]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  const ChannelParams& params() const { return params_; }
  const RateTable& table() const { return table_; }

 private:
  ChannelParams params_;
  RateTable table_;
  double step_;
  std::vector<double> values_;
};

}  // namespace cft
