#pragma once

#include <vector>

namespace cft {

// Constant-window DCF with RTS/CTS. Durations in seconds, lp in bits.
struct MacParams {
  int w = 32;
  double lp = 4.2 * 1000 * 8;
  double t_slot = 13e-6;
  double t_rts = 53e-6;
  double t_cts = 37e-6;
  double t_difs = 32e-6;
  double t_sifs = 53e-6;
  double t_ack = 37e-6;
  double rcs = 250.0;  // carrier-sense range, m

  void validate() const;
  // Airtime of one successful RTS/CTS/DATA/ACK exchange, and of a collision.
  double success_time(double data_rate) const;
  double collision_time() const { return t_rts + t_difs; }
};

double transmission_prob(int w);

// Poisson(lambda) masses, truncated once the remaining tail is below 1e-12 and
// renormalised.
std::vector<double> contention_pmf(double lambda);
inline std::vector<double> contention_pmf(double rho, double rcs) { return contention_pmf(rho * rcs); }

double p_success(int n, double zeta);
double avg_slot_length(int n, double zeta, const MacParams& params, double data_rate);

// Per-contender-count throughput term: P_suc * lp / T * (1 - (1 - zeta)^n).
double throughput_given(int n, double zeta, const MacParams& params, double data_rate);

// Expected MAC throughput in bit/s; rho in vehicles per metre.
double throughput(double rho, const MacParams& params, double data_rate);

// throughput() with the contention distribution computed once.
class ThroughputModel {
 public:
  ThroughputModel(double rho, MacParams params);
  double operator()(double data_rate) const;
  const std::vector<double>& pmf() const { return pmf_; }

 private:
  MacParams params_;
  double zeta_;
  std::vector<double> pmf_;
};

}  // namespace cft
