#include "cft/connection.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "cft/errors.hpp"

namespace cft {

namespace {
// Distances are compared with a small slack so a pair sitting exactly on the
// range boundary after floating-point wrap counts as connected.
constexpr double kRangeSlack = 1e-9;
}

double KinematicPair::distance() const { return std::hypot(ddx, ddy); }

KinematicPair KinematicPair::between(const VehicleState& i, const VehicleState& j,
                                     double ring_length) {
  const auto [dx, dy] = displacement(i, j, ring_length);
  return {i.vx() - j.vx(), i.vy() - j.vy(), dx, dy};
}

double ConnectionPrediction::capped(double horizon) const {
  return delta_t ? std::min(*delta_t, horizon) : horizon;
}

ConnectionPrediction predict_connection_time(const VehicleState& a, const VehicleState& b,
                                             double range) {
  return predict_connection_time(KinematicPair::between(a, b), range);
}

ConnectionPrediction predict_connection_time(const KinematicPair& k, double range) {
  const double d2 = k.ddx * k.ddx + k.ddy * k.ddy;
  if (std::sqrt(d2) > range * (1.0 + kRangeSlack))
    throw OutOfRangeError("predict_connection_time: vehicles " + std::to_string(std::sqrt(d2)) +
                          " m apart, range " + std::to_string(range) + " m");
  const double B = k.b();
  if (B == 0.0) return {std::nullopt};
  const double A = k.a();
  const double c = k.cross();
  double radicand = B * range * range - c * c;
  assert(radicand >= -1e-9 * B * range * range);
  radicand = std::max(radicand, 0.0);
  const double root = std::sqrt(radicand);
  // radicand - A^2 = B (R^2 - d^2); the second form avoids cancellation when
  // the pair is already separating (A > 0).
  const double dt = A <= 0.0 ? (root - A) / B : std::max(range * range - d2, 0.0) / (root + A);
  return {std::max(dt, 0.0)};
}

std::optional<ContactWindow> contact_window(const KinematicPair& k, double range) {
  const double d = k.distance();
  const double B = k.b();
  if (B == 0.0) {
    if (d <= range * (1.0 + kRangeSlack)) return ContactWindow{0.0, std::nullopt};
    return std::nullopt;
  }
  if (d <= range * (1.0 + kRangeSlack)) {
    const auto p = predict_connection_time(k, range);
    return ContactWindow{0.0, p.delta_t};
  }
  const double A = k.a();
  const double c = k.cross();
  const double radicand = B * range * range - c * c;
  if (radicand < 0.0) return std::nullopt;
  const double root = std::sqrt(radicand);
  // outside the circle: both roots share a sign; negative means the window is past
  const double t_exit = (root - A) / B;
  if (t_exit <= 0.0) return std::nullopt;
  const double t_enter = (d * d - range * range) / (root - A);
  return ContactWindow{t_enter, t_exit};
}

}  // namespace cft
