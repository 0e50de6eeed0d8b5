#pragma once

#include <optional>

#include "cft/mobility.hpp"

namespace cft {

// Relative kinematics of vehicle i with respect to vehicle j (i minus j).
struct KinematicPair {
  double dvx = 0.0, dvy = 0.0;
  double ddx = 0.0, ddy = 0.0;

  double a() const { return dvx * ddx + dvy * ddy; }
  double b() const { return dvx * dvx + dvy * dvy; }
  double cross() const { return dvy * ddx - dvx * ddy; }
  double distance() const;

  static KinematicPair between(const VehicleState& i, const VehicleState& j,
                               double ring_length = 0.0);
};

// Remaining connection time. An empty value means the pair never separates.
struct ConnectionPrediction {
  std::optional<double> delta_t;

  bool unbounded() const { return !delta_t.has_value(); }
  // Effective duration when the run only lasts `horizon` more seconds.
  double capped(double horizon) const;
};

// Throws OutOfRangeError when the pair is not currently connected.
ConnectionPrediction predict_connection_time(const VehicleState& a, const VehicleState& b,
                                             double range);
ConnectionPrediction predict_connection_time(const KinematicPair& k, double range);

// Interval of future time during which the pair is within range, possibly
// starting later than now. exit is empty for a pair that never separates.
struct ContactWindow {
  double enter = 0.0;
  std::optional<double> exit;
};
std::optional<ContactWindow> contact_window(const KinematicPair& k, double range);

}  // namespace cft
