// Incomplete gamma via the usual split: power series for the lower function
// when z < mu + 1, Lentz continued fraction for the upper function otherwise.

#include <cmath>
#include <limits>
#include <string>

#include "cft/channel.hpp"
#include "cft/errors.hpp"

namespace cft {

namespace {

constexpr int kMaxIter = 100000;
constexpr double kEps = 4e-16;  // about two ulps; 1 ulp can stall the fraction
constexpr double kTiny = 1e-300;

// log of exp(-z) z^mu / Gamma(mu)
double log_prefactor(double mu, double z) { return -z + mu * std::log(z) - std::lgamma(mu); }

// P(mu, z), lower regularized
double lower_series(double mu, double z) {
  double ap = mu;
  double term = 1.0 / mu;
  double sum = term;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    term *= z / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) return sum * std::exp(log_prefactor(mu, z));
  }
  throw DomainError("incomplete gamma: series did not converge (mu=" + std::to_string(mu) + ", z=" +
                    std::to_string(z) + ")");
}

// Q(mu, z), upper regularized
double upper_fraction(double mu, double z) {
  double b = z + 1.0 - mu;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - mu);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return std::exp(log_prefactor(mu, z)) * h;
  }
  throw DomainError("incomplete gamma: continued fraction did not converge (mu=" + std::to_string(mu) +
                    ", z=" + std::to_string(z) + ")");
}

void check(double mu, double z) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw DomainError("incomplete gamma: mu must be > 0, got " + std::to_string(mu));
  if (!(z >= 0.0)) throw DomainError("incomplete gamma: z must be >= 0");
}

}  // namespace

double regularized_upper_gamma(double mu, double z) {
  check(mu, z);
  if (z == 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  if (z < mu + 1.0) return 1.0 - lower_series(mu, z);
  if (log_prefactor(mu, z) < -760.0) return 0.0;  // below the smallest denormal
  return upper_fraction(mu, z);
}

double upper_incomplete_gamma(double mu, double z) {
  check(mu, z);
  if (z == 0.0) return std::tgamma(mu);
  if (std::isinf(z)) return 0.0;
  if (z < mu + 1.0) return std::tgamma(mu) * (1.0 - lower_series(mu, z));
  if (log_prefactor(mu, z) < -760.0) return 0.0;
  return upper_fraction(mu, z) * std::exp(std::lgamma(mu));
}

}  // namespace cft
