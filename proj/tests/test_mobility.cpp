#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "cft/errors.hpp"
#include "cft/mobility.hpp"

using namespace cft;

namespace {

MobilityConfig base() {
  MobilityConfig c;
  c.density = 5e-3;
  return c;
}

// Gaps between consecutive lane members, front to back, including the wrap.
std::vector<double> lane_gaps(const Fleet& f, int lane, double L) {
  const auto order = lane_order(f, lane, L);
  std::vector<double> g;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& front = f[order[k]];
    const auto& rear = f[order[(k + 1) % order.size()]];
    g.push_back(lane_gap(rear, front, L));
  }
  return g;
}

}  // namespace

TEST(Mobility, CountsFollowDensity) {
  for (double rho : {1e-3, 5e-3, 7.5e-3, 10e-3}) {
    auto c = base();
    c.density = rho;
    Rng rng(1);
    const auto f = init_scenario(c, rng);
    const int per_dir = static_cast<int>(std::floor(rho * c.lane_length + 1e-9));
    EXPECT_EQ(static_cast<int>(f.size()), 2 * per_dir);
    std::map<int, int> per_lane;
    for (const auto& v : f) per_lane[v.lane]++;
    for (int lane = 0; lane < c.lane_count(); lane += c.lanes_per_direction) {
      const int a = per_lane[lane], b = per_lane[lane + 1];
      EXPECT_LE(std::abs(a - b), 1);
      EXPECT_EQ(a + b, per_dir);
    }
  }
}

TEST(Mobility, HeadingsAndLaneGeometry) {
  auto c = base();
  Rng rng(2);
  for (const auto& v : init_scenario(c, rng)) {
    if (v.lane < c.lanes_per_direction) {
      EXPECT_EQ(v.direction, 0.0);
      EXPECT_GT(v.vx(), 0.0);
    } else {
      EXPECT_EQ(v.direction, std::numbers::pi);
      EXPECT_LT(v.vx(), 0.0);
    }
    EXPECT_EQ(v.vy(), 0.0);
    EXPECT_DOUBLE_EQ(v.y, (v.lane + 0.5) * c.lane_width);
    EXPECT_GE(v.x, 0.0);
    EXPECT_LT(v.x, c.lane_length);
    EXPECT_GE(v.speed, c.v_min);
    EXPECT_LE(v.speed, c.v_max);
  }
}

TEST(Mobility, ZeroDrawsGiveSafetyDistanceGaps) {
  auto c = base();
  ConstantSource zero(0.0);
  const auto f = init_scenario(c, zero);
  for (int lane = 0; lane < c.lane_count(); ++lane) {
    const auto g = lane_gaps(f, lane, c.lane_length);
    // every gap but the ring-closing one is exactly SD
    int exact = 0;
    for (double x : g)
      if (std::abs(x - c.safety_distance) < 1e-6) ++exact;
    EXPECT_GE(exact, static_cast<int>(g.size()) - 1);
  }
  for (const auto& v : f) EXPECT_DOUBLE_EQ(v.speed, c.v_min);
}

TEST(Mobility, CrowdedLaneIsCompressedButKeepsSD) {
  auto c = base();
  c.density = 30e-3;  // 165 per lane at 150 m needs 24.75 km of 11 km... too many
  EXPECT_THROW(c.validate(), ConfigError);
  c.density = 12e-3;  // 66 per lane, 9.9 km of SD in 11 km
  ConstantSource near_one(0.999);
  const auto f = init_scenario(c, near_one);
  for (int lane = 0; lane < c.lane_count(); ++lane)
    for (double g : lane_gaps(f, lane, c.lane_length)) EXPECT_GE(g, c.safety_distance - 1e-6);
}

// Monte-Carlo check of the (1 + U) * SD spacing: mean 1.5 SD, sd SD / sqrt(12).
TEST(Mobility, InitialGapMeanMatchesUniformSpacing) {
  auto c = base();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto f = init_scenario(c, rng);
    for (int lane = 0; lane < c.lane_count(); ++lane) {
      auto g = lane_gaps(f, lane, c.lane_length);
      std::sort(g.begin(), g.end());
      g.pop_back();  // the closing gap takes the remainder and is the largest
      for (double x : g) {
        sum += x;
        ++n;
      }
    }
  }
  const double mean = sum / n;
  const double sigma = c.safety_distance / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  // dropping the largest gap biases slightly low only when the closing gap is not the largest
  EXPECT_NEAR(mean, 1.5 * c.safety_distance, 4.0 * sigma);
}

TEST(Mobility, StepKeepsSpeedBoundsAndSafetyRule) {
  auto c = base();
  c.density = 10e-3;
  Rng rng(7);
  auto f = init_scenario(c, rng);
  for (int s = 0; s < 400; ++s) {
    step(f, c, rng);
    for (const auto& v : f) {
      ASSERT_GE(v.speed, c.v_min);
      ASSERT_LE(v.speed, c.v_max);
      ASSERT_GE(v.x, 0.0);
      ASSERT_LT(v.x, c.lane_length);
    }
    for (int lane = 0; lane < c.lane_count(); ++lane) {
      const auto order = lane_order(f, lane, c.lane_length);
      for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& front = f[order[k]];
        const auto& rear = f[order[(k + 1) % order.size()]];
        if (lane_gap(rear, front, c.lane_length) <= c.safety_distance)
          ASSERT_LE(rear.speed, front.speed) << "lane " << lane << " step " << s;
      }
    }
  }
}

TEST(Mobility, StepMovesByVelocity) {
  auto c = base();
  c.accel_mag = 0.0;
  Fleet f(1);
  f[0].lane = 2;
  f[0].direction = std::numbers::pi;
  f[0].x = 10.0;
  f[0].speed = 20.0;
  Rng rng(3);
  step(f, c, rng);
  EXPECT_NEAR(f[0].x, c.lane_length - 10.0, 1e-9);  // wrapped
  EXPECT_DOUBLE_EQ(f[0].speed, 20.0);
}

TEST(Mobility, SpeedClampsAtBounds) {
  auto c = base();
  Fleet f(2);
  f[0].speed = c.v_max;
  f[1].lane = 1;
  f[1].speed = c.v_min;
  ConstantSource up(0.9999999);
  for (int i = 0; i < 5; ++i) step(f, c, up);
  EXPECT_DOUBLE_EQ(f[0].speed, c.v_max);
  ConstantSource down(0.0);
  for (int i = 0; i < 50; ++i) step(f, c, down);
  EXPECT_DOUBLE_EQ(f[1].speed, c.v_min);
  EXPECT_DOUBLE_EQ(f[0].speed, c.v_min);
}

TEST(Mobility, RingDistanceUsesShortestWay) {
  VehicleState a, b;
  a.x = 10.0;
  b.x = 10990.0;
  EXPECT_NEAR(ring_distance(a, b, 11000.0), 20.0, 1e-9);
  EXPECT_NEAR(ring_distance(a, b, 0.0), 10980.0, 1e-9);
  b.y = 15.0;
  b.x = 30.0;
  EXPECT_NEAR(ring_distance(a, b, 11000.0), 25.0, 1e-9);
  EXPECT_NEAR(distance(a, b), 25.0, 1e-9);
}

TEST(Mobility, ExtrapolateWraps) {
  VehicleState v;
  v.x = 10990.0;
  v.speed = 20.0;
  const auto w = extrapolate(v, 1.0, 11000.0);
  EXPECT_NEAR(w.x, 10.0, 1e-9);
}

TEST(Mobility, DeterministicForSeed) {
  auto c = base();
  Rng a(99), b(99);
  auto fa = init_scenario(c, a), fb = init_scenario(c, b);
  for (int i = 0; i < 50; ++i) {
    step(fa, c, a);
    step(fb, c, b);
  }
  std::ostringstream sa, sb;
  write_snapshot_csv(sa, fa);
  write_snapshot_csv(sb, fb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Mobility, RejectsBadConfig) {
  auto c = base();
  c.v_max = c.v_min;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base();
  c.lanes_per_direction = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base();
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
