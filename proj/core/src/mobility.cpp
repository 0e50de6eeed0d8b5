#include "cft/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "cft/errors.hpp"

namespace cft {

namespace {

double wrap(double x, double length) {
  if (length <= 0.0) return x;
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  return r;
}

// Position measured along the direction of travel.
double lane_coord(const VehicleState& v, double length) {
  return v.direction == 0.0 ? v.x : wrap(-v.x, length);
}

}  // namespace

std::pair<double, double> heading_vector(double direction) {
  if (direction == 0.0) return {1.0, 0.0};
  if (direction == std::numbers::pi) return {-1.0, 0.0};
  return {std::cos(direction), std::sin(direction)};
}

double VehicleState::vx() const { return speed * heading_vector(direction).first; }
double VehicleState::vy() const { return speed * heading_vector(direction).second; }

void MobilityConfig::validate() const {
  if (!(v_min > 0.0) || !(v_max > v_min)) throw ConfigError("mobility: need 0 < v_min < v_max");
  if (!(safety_distance > 0.0)) throw ConfigError("mobility: safety_distance must be > 0");
  if (!(dt > 0.0)) throw ConfigError("mobility: dt must be > 0");
  if (!(accel_mag >= 0.0)) throw ConfigError("mobility: accel must be >= 0");
  if (!(lane_length > 0.0) || !(lane_width > 0.0)) throw ConfigError("mobility: lane geometry must be > 0");
  if (lanes_per_direction < 1) throw ConfigError("mobility: lanes_per_direction must be >= 1");
  if (!(density >= 0.0)) throw ConfigError("mobility: density must be >= 0");
  if (lane_length < safety_distance) throw ConfigError("mobility: lane shorter than the safety distance");
  const int per_lane = (vehicles_per_direction() + lanes_per_direction - 1) / lanes_per_direction;
  if (per_lane * safety_distance > lane_length)
    throw ConfigError("mobility: lane cannot hold its vehicles at the safety distance");
}

int MobilityConfig::vehicles_per_direction() const {
  return static_cast<int>(std::floor(density * lane_length + 1e-9));
}

double MobilityConfig::lane_heading(int lane) const {
  return lane < lanes_per_direction ? 0.0 : std::numbers::pi;
}

Fleet init_scenario(const MobilityConfig& cfg, RandomSource& rng) {
  cfg.validate();
  const int per_dir = cfg.vehicles_per_direction();
  const int lanes = cfg.lanes_per_direction;
  Fleet fleet;
  fleet.reserve(2 * per_dir);
  int next_id = 0;
  for (int dir = 0; dir < 2; ++dir) {
    for (int l = 0; l < lanes; ++l) {
      // round-robin over the lanes of this direction
      const int count = per_dir / lanes + (l < per_dir % lanes ? 1 : 0);
      if (count == 0) continue;
      const int lane = dir * lanes + l;
      const double heading = cfg.lane_heading(lane);

      // gaps (1 + g) * SD; the last one closes the ring and gets the remainder
      std::vector<double> extra(count);
      double extra_sum = 0.0;
      for (auto& e : extra) {
        e = rng.unit();
        extra_sum += e;
      }
      const double room = cfg.lane_length - count * cfg.safety_distance;
      const double spare = room - (extra_sum - extra.back()) * cfg.safety_distance;
      double shrink = 1.0;
      if (spare < 0.0) shrink = room / ((extra_sum - extra.back()) * cfg.safety_distance);
      const double start = rng.uniform(0.0, cfg.lane_length);

      double s = start;  // lane coordinate of the current vehicle, front first
      for (int k = 0; k < count; ++k) {
        VehicleState v;
        v.id = next_id++;
        v.lane = lane;
        v.direction = heading;
        v.y = cfg.lane_y(lane);
        v.x = heading == 0.0 ? wrap(s, cfg.lane_length) : wrap(-s, cfg.lane_length);
        v.speed = cfg.v_min + rng.unit() * (cfg.v_max - cfg.v_min);
        fleet.push_back(v);
        s -= (1.0 + shrink * extra[k]) * cfg.safety_distance;
      }
    }
  }
  return fleet;
}

double lane_gap(const VehicleState& rear, const VehicleState& front, double length) {
  return wrap(lane_coord(front, length) - lane_coord(rear, length), length);
}

std::vector<std::size_t> lane_order(const Fleet& fleet, int lane, double length) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fleet.size(); ++i)
    if (fleet[i].lane == lane) idx.push_back(i);
  if (idx.size() < 2) return idx;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ca = lane_coord(fleet[a], length), cb = lane_coord(fleet[b], length);
    return ca != cb ? ca > cb : fleet[a].id < fleet[b].id;
  });
  // rotate so the vehicle with the largest gap ahead comes first
  const std::size_t n = idx.size();
  std::size_t lead = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double g = lane_gap(fleet[idx[k]], fleet[idx[(k + n - 1) % n]], length);
    if (g > best) {
      best = g;
      lead = k;
    }
  }
  std::rotate(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(lead), idx.end());
  return idx;
}

namespace {

// rear := min(rear, front) wherever the gap is within SD, front to back.
// Two sweeps so a slow vehicle's influence can travel the whole ring.
void enforce_safety_distance(Fleet& fleet, const MobilityConfig& cfg) {
  for (int lane = 0; lane < cfg.lane_count(); ++lane) {
    const auto order = lane_order(fleet, lane, cfg.lane_length);
    const std::size_t n = order.size();
    if (n < 2) continue;
    for (std::size_t pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 1; k <= n; ++k) {
        auto& rear = fleet[order[k % n]];
        const auto& front = fleet[order[k - 1]];
        if (lane_gap(rear, front, cfg.lane_length) <= cfg.safety_distance)
          rear.speed = std::min(rear.speed, front.speed);
      }
    }
  }
}

}  // namespace

void step(Fleet& fleet, const MobilityConfig& cfg, RandomSource& rng) {
  for (auto& v : fleet) {
    v.speed += rng.symmetric() * cfg.accel_mag * cfg.dt;
    v.speed = std::clamp(v.speed, cfg.v_min, cfg.v_max);
  }
  // Applied on both sides of the move: before, so that a gap inside SD never
  // shrinks; after, so the rule holds on the gaps the caller observes.
  enforce_safety_distance(fleet, cfg);
  for (auto& v : fleet) v.x = wrap(v.x + v.vx() * cfg.dt, cfg.lane_length);
  enforce_safety_distance(fleet, cfg);
}

double distance(const VehicleState& a, const VehicleState& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::pair<double, double> displacement(const VehicleState& a, const VehicleState& b,
                                       double ring_length) {
  double dx = a.x - b.x;
  if (ring_length > 0.0) dx -= ring_length * std::round(dx / ring_length);
  return {dx, a.y - b.y};
}

double ring_distance(const VehicleState& a, const VehicleState& b, double ring_length) {
  const auto [dx, dy] = displacement(a, b, ring_length);
  return std::hypot(dx, dy);
}

VehicleState extrapolate(const VehicleState& v, double t, double ring_length) {
  VehicleState out = v;
  out.x = wrap(v.x + v.vx() * t, ring_length);
  out.y = v.y + v.vy() * t;
  return out;
}

void write_snapshot_csv(std::ostream& os, const Fleet& fleet) {
  os << "id,lane,direction,x,y,speed\n";
  for (const auto& v : fleet)
    os << v.id << ',' << v.lane << ',' << v.direction << ',' << v.x << ',' << v.y << ',' << v.speed
       << '\n';
}

}  // namespace cft
