#include "cft/mac.hpp"

#include <algorithm>
#include <cmath>

#include "cft/errors.hpp"

namespace cft {

void MacParams::validate() const {
  if (w < 1) throw ConfigError("mac: window must be >= 1");
  if (!(lp > 0.0)) throw ConfigError("mac: packet length must be > 0");
  if (!(t_slot > 0 && t_rts > 0 && t_cts > 0 && t_difs > 0 && t_sifs > 0 && t_ack > 0))
    throw ConfigError("mac: durations must be > 0");
  if (!(rcs > 0.0)) throw ConfigError("mac: carrier-sense range must be > 0");
}

double MacParams::success_time(double data_rate) const {
  return t_rts + t_sifs + t_cts + t_sifs + lp / data_rate + t_sifs + t_ack + t_difs;
}

double transmission_prob(int w) {
  if (w < 1) throw DomainError("transmission_prob: window must be >= 1");
  return 2.0 / (w + 1.0);
}

std::vector<double> contention_pmf(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("contention_pmf: rho * rcs must be >= 0");
  if (lambda == 0.0) return {1.0};
  std::vector<double> pmf;
  double mass = 0.0;
  double log_f = -lambda;  // log f(0)
  for (int x = 0;; ++x) {
    if (x > 0) log_f += std::log(lambda) - std::log(static_cast<double>(x));
    const double f = std::exp(log_f);
    pmf.push_back(f);
    mass += f;
    if (x > lambda && 1.0 - mass < 1e-12) break;
    if (x > 100000) break;
  }
  for (auto& f : pmf) f /= mass;
  return pmf;
}

double p_success(int n, double zeta) {
  if (n < 1) throw DomainError("p_success: need at least one contender");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw DomainError("p_success: zeta must be in (0, 1]");
  if (n == 1) return 1.0;
  const double idle = std::pow(1.0 - zeta, n);
  return n * zeta * std::pow(1.0 - zeta, n - 1) / (1.0 - idle);
}

double avg_slot_length(int n, double zeta, const MacParams& p, double data_rate) {
  const double p_idle = std::pow(1.0 - zeta, n);
  const double p_tr = 1.0 - p_idle;
  const double p_s = p_tr * p_success(n, zeta);
  const double p_c = std::max(p_tr - p_s, 0.0);
  return p_idle * p.t_slot + p_s * p.success_time(data_rate) + p_c * p.collision_time();
}

double throughput_given(int n, double zeta, const MacParams& p, double data_rate) {
  if (!(data_rate > 0.0)) return 0.0;
  const double p_tr = 1.0 - std::pow(1.0 - zeta, n);
  return p_success(n, zeta) * p.lp / avg_slot_length(n, zeta, p, data_rate) * p_tr;
}

ThroughputModel::ThroughputModel(double rho, MacParams params)
    : params_(params), zeta_(transmission_prob(params.w)), pmf_(contention_pmf(rho, params.rcs)) {}

double ThroughputModel::operator()(double data_rate) const {
  double r = 0.0;
  for (std::size_t n = 0; n < pmf_.size(); ++n) {
    // the transferring pair itself is always present
    const int contenders = std::max<int>(static_cast<int>(n), 1);
    r += pmf_[n] * throughput_given(contenders, zeta_, params_, data_rate);
  }
  return r;
}

double throughput(double rho, const MacParams& params, double data_rate) {
  return ThroughputModel(rho, params)(data_rate);
}

}  // namespace cft
