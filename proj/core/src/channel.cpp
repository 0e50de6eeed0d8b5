#include "cft/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cft/errors.hpp"

namespace cft {

double MuProfile::at(double d) const {
  double mu = segments.empty() ? 1.0 : segments.front().mu;
  for (const auto& s : segments) {
    if (d >= s.from) mu = s.mu;
    else break;
  }
  return mu;
}

void MuProfile::validate() const {
  if (segments.empty()) throw ConfigError("channel: empty mu profile");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].mu > 0.0)) throw ConfigError("channel: mu must be > 0");
    if (i > 0 && !(segments[i].from > segments[i - 1].from))
      throw ConfigError("channel: mu profile breakpoints must ascend");
  }
  if (segments.front().from > 0.0) throw ConfigError("channel: mu profile must start at 0 m");
}

void ChannelParams::validate() const {
  if (!(pt > 0 && gt > 0 && gr > 0 && ht > 0 && hr > 0 && loss > 0 && nr > 0))
    throw ConfigError("channel: physical constants must be > 0");
  if (!(alpha >= 2.0)) throw ConfigError("channel: alpha must be >= 2");
  mu_profile.validate();
}

void RateTable::validate() const {
  if (rates.empty() || rates.size() != thresholds.size())
    throw ConfigError("rates: need equally many rates and thresholds");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] > 0.0)) throw ConfigError("rates: rates must be > 0");
    if (!(thresholds[i] >= 0.0)) throw ConfigError("rates: thresholds must be >= 0");
    if (i > 0 && !(rates[i] > rates[i - 1])) throw ConfigError("rates: rates must ascend strictly");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw ConfigError("rates: thresholds must ascend strictly");
  }
}

double mean_power(double d, const ChannelParams& p) {
  if (!(d > 0.0)) throw DomainError("mean_power: distance must be > 0");
  return p.pt * p.gt * p.gr * p.ht * p.ht * p.hr * p.hr / (std::pow(d, p.alpha) * p.loss);
}

double mu_for_distance(double d, const MuProfile& profile) { return profile.at(d); }

double snr_cdf(double x, double d, const ChannelParams& p) {
  if (!(x >= 0.0)) throw DomainError("snr_cdf: x must be >= 0");
  const double mu = mu_for_distance(d, p.mu_profile);
  const double omega = mean_power(d, p);
  return 1.0 - regularized_upper_gamma(mu, mu / omega * p.nr * x);
}

RateDistribution rate_distribution(double d, const ChannelParams& p, const RateTable& table) {
  const double mu = mu_for_distance(d, p.mu_profile);
  const double scale = mu / mean_power(d, p) * p.nr;
  const std::size_t K = table.rates.size();
  // g[k] = Gamma_k / Gamma(mu); g[K] = 0 for the open-ended top rung
  std::vector<double> g(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double z = scale * table.thresholds[k];
    g[k] = std::isinf(z) ? 0.0 : regularized_upper_gamma(mu, z);
  }
  RateDistribution out;
  out.p.resize(K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    out.p[k] = std::max(g[k] - g[k + 1], 0.0);
    total += out.p[k];
    out.expected_rate += table.rates[k] * out.p[k];
  }
  out.p_zero = std::max(1.0 - total, 0.0);
  return out;
}

double expected_rate(double d, const ChannelParams& p, const RateTable& table) {
  return rate_distribution(d, p, table).expected_rate;
}

RateCurve::RateCurve(ChannelParams params, RateTable table, double max_distance, double step)
    : params_(std::move(params)), table_(std::move(table)), step_(step) {
  if (!(step > 0.0) || !(max_distance > 0.0)) throw ConfigError("rate curve: bad grid");
  const auto n = static_cast<std::size_t>(std::ceil(max_distance / step)) + 1;
  values_.resize(n + 1);
  values_[0] = expected_rate(0.5 * step, params_, table_);
  for (std::size_t i = 1; i <= n; ++i)
    values_[i] = expected_rate(static_cast<double>(i) * step, params_, table_);
}

std::size_t RateCurve::node(double d) const {
  if (!(d > 0.0)) throw DomainError("rate curve: distance must be > 0");
  const auto i = static_cast<std::size_t>(std::llround(d / step_));
  return i < values_.size() ? i : npos;
}

double RateCurve::operator()(double d) const {
  const auto i = node(d);
  return i != npos ? values_[i] : expected_rate(d, params_, table_);
}

}  // namespace cft
