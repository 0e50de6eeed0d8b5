#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "cft/random.hpp"

namespace cft {

struct VehicleState {
  int id = 0;
  int lane = 0;
  double direction = 0.0;  // heading, radians: 0 (+x) or pi (-x)
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;  // m/s

  double vx() const;
  double vy() const;
};

using Fleet = std::vector<VehicleState>;

struct MobilityConfig {
  double v_min = 60.0 / 3.6;
  double v_max = 120.0 / 3.6;
  double safety_distance = 150.0;
  double dt = 1.0;
  double accel_mag = 2.0;
  double lane_length = 11000.0;
  double lane_width = 5.0;
  int lanes_per_direction = 2;
  double density = 5e-3;  // vehicles per metre, per direction

  void validate() const;  // throws ConfigError
  int vehicles_per_direction() const;
  int lane_count() const { return 2 * lanes_per_direction; }
  double lane_y(int lane) const { return (lane + 0.5) * lane_width; }
  double lane_heading(int lane) const;
};

// Unit vector of a heading; exact for the two highway directions.
std::pair<double, double> heading_vector(double direction);

Fleet init_scenario(const MobilityConfig& config, RandomSource& rng);

// One time step: speed noise, safety-distance rule, position update, wrap.
void step(Fleet& fleet, const MobilityConfig& config, RandomSource& rng);

double distance(const VehicleState& a, const VehicleState& b);

// Displacement a - b with the x component taken as the shortest way around a
// ring of the given length. ring_length <= 0 means an open road.
std::pair<double, double> displacement(const VehicleState& a, const VehicleState& b,
                                       double ring_length);
double ring_distance(const VehicleState& a, const VehicleState& b, double ring_length);

// Gap from a rear vehicle to the vehicle ahead of it in the same lane.
double lane_gap(const VehicleState& rear, const VehicleState& front, double lane_length);

// Lane members ordered from the front of the lane backwards. The first entry is
// the vehicle with the largest free gap ahead of it (a platoon leader).
std::vector<std::size_t> lane_order(const Fleet& fleet, int lane, double lane_length);

// Constant-velocity extrapolation, wrapped onto the ring.
VehicleState extrapolate(const VehicleState& v, double t, double ring_length);

void write_snapshot_csv(std::ostream& os, const Fleet& fleet);

}  // namespace cft
