#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "cft/errors.hpp"
#include "cft/protocol.hpp"
#include "cft/simulator.hpp"
#include "oracles.hpp"

using namespace cft;

namespace {

constexpr double kPi = std::numbers::pi;

VehicleState car(int id, int lane, double x, double speed) {
  VehicleState v;
  v.id = id;
  v.lane = lane;
  v.direction = lane < 2 ? 0.0 : kPi;
  v.x = x;
  v.y = (lane + 0.5) * 5.0;
  v.speed = speed;
  return v;
}

// Every SNR maps to 11 Mbit/s, so capacities are exact multiples.
Models flat_models(double range = 250.0, std::optional<double> horizon = std::nullopt) {
  return Models(ChannelParams{}, RateTable{{11e6}, {0.0}}, MacParams{}, range, 5e-3, 0.0, horizon);
}

Models table_models(double rho, double range) { return default_experiment().models_at(rho, range); }

// Head at 0 heading +x; helpers trail it in lane 1 at the same speed; the
// resource comes the other way and passes all of them.
Fleet convoy(int helpers) {
  Fleet f{car(0, 0, 0.0, 25.0), car(1, 2, 200.0, 25.0)};
  for (int k = 0; k < helpers; ++k) f.push_back(car(2 + k, 1, -200.0 * (k + 1), 25.0));
  return f;
}

std::vector<Participant> participants_from(const Cluster& c, const Fleet& fleet) {
  std::map<int, int> index{{c.head, 0}};
  std::vector<Participant> parts{{fleet[c.head], -1}};
  for (const auto& m : c.members) {
    index[m.id] = static_cast<int>(parts.size());
    parts.push_back({fleet[m.id], index.at(m.parent)});
  }
  return parts;
}

// Partition checker: slices are disjoint, contiguous and cover 1..N.
::testing::AssertionResult partitions(const TransferPlan& plan, std::int64_t n) {
  std::vector<int> seen(static_cast<std::size_t>(n + 1), 0);
  for (const auto& s : plan.slices) {
    if (s.first < 1 || s.last > n || s.first > s.last)
      return ::testing::AssertionFailure() << "bad slice " << s.first << ".." << s.last;
    for (auto k = s.first; k <= s.last; ++k) seen[static_cast<std::size_t>(k)]++;
  }
  for (std::int64_t k = 1; k <= n; ++k)
    if (seen[static_cast<std::size_t>(k)] != 1)
      return ::testing::AssertionFailure() << "fragment " << k << " seen " << seen[static_cast<std::size_t>(k)];
  return ::testing::AssertionSuccess();
}

}  // namespace

// ---------------------------------------------------------------------------
// link budgets

TEST(LinkBudget, ExactDivision) {
  const auto lb = make_link_budget(8e6, ConnectionPrediction{10.0}, 1000000);
  EXPECT_EQ(lb.n_frags, 10);
  EXPECT_EQ(lb.capacity, 10000000);
  EXPECT_DOUBLE_EQ(lb.t0, 10.0);
  EXPECT_DOUBLE_EQ(lb.t_resid, 0.0);
}

TEST(LinkBudget, FloorLeavesResidual) {
  const auto lb = make_link_budget(8e6, ConnectionPrediction{10.5}, 1000000);
  EXPECT_EQ(lb.n_frags, 10);
  EXPECT_EQ(lb.capacity, 10000000);
  EXPECT_NEAR(lb.t_resid, 0.5, 1e-12);
}

TEST(LinkBudget, MatchesFragmentStepping) {
  Rng rng(21);
  for (int i = 0; i < 5000; ++i) {
    const double e = rng.uniform(0.5e6, 11e6);
    const double dt = rng.uniform(0.0, 60.0);
    const std::int64_t s = 1000 + static_cast<std::int64_t>(rng.index(200000));
    const auto lb = make_link_budget(e, ConnectionPrediction{dt}, s);
    // send fragments one at a time until the next would not finish
    std::int64_t done = 0;
    double t = 0.0;
    const double per = 8.0 * s / e;
    while ((done + 1) * per <= dt) {
      t = (done + 1) * per;
      ++done;
    }
    ASSERT_EQ(lb.n_frags, done);
    EXPECT_EQ(lb.capacity, done * s);
    EXPECT_GE(lb.t_resid, 0.0);
    EXPECT_LT(lb.t_resid, per + 1e-9);
    EXPECT_NEAR(lb.t0, t, 1e-9);
  }
}

TEST(LinkBudget, UnboundedAndCapped) {
  const auto open = make_link_budget(8e6, ConnectionPrediction{}, 1000000);
  EXPECT_TRUE(open.unbounded);
  EXPECT_EQ(open.capacity, kUnboundedBytes);
  const auto capped = make_link_budget(8e6, ConnectionPrediction{}, 1000000, 60.0);
  EXPECT_FALSE(capped.unbounded);
  EXPECT_EQ(capped.n_frags, 60);
}

TEST(LinkBudget, OutOfRangeThrows) {
  const auto m = flat_models();
  EXPECT_THROW(link_budget(car(0, 0, 0.0, 25.0), car(1, 2, 400.0, 25.0), FileSpec{1, 1}, m), OutOfRangeError);
}

TEST(FileSpec, FragmentCount) {
  EXPECT_EQ((FileSpec{0, 10}).n_total(), 0);
  EXPECT_EQ((FileSpec{1, 10}).n_total(), 1);
  EXPECT_EQ((FileSpec{10, 10}).n_total(), 1);
  EXPECT_EQ((FileSpec{11, 10}).n_total(), 2);
  EXPECT_EQ((FileSpec{25, 10}).bytes_of(2), 20);
  EXPECT_EQ((FileSpec{25, 10}).bytes_of(3), 25);
  EXPECT_THROW((FileSpec{10, 0}).validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// resource selection and direct transfers

TEST(SelectResource, Singleton) {
  const auto m = flat_models();
  const auto r = car(0, 0, 0.0, 25.0);
  EXPECT_EQ(select_resource(r, {car(5, 2, 100.0, 25.0)}, FileSpec{1000, 100}, m), 5);
  EXPECT_THROW(select_resource(r, {}, FileSpec{1000, 100}, m), NoResourceError);
}

TEST(SelectResource, UnboundedWins) {
  const auto m = flat_models();
  const auto r = car(0, 0, 0.0, 25.0);
  EXPECT_EQ(select_resource(r, {car(5, 2, 10.0, 25.0), car(6, 1, 200.0, 25.0)}, FileSpec{1000, 100}, m), 6);
}

TEST(SelectResource, TieBreaksByDistanceThenId) {
  const auto m = flat_models();
  const auto r = car(0, 0, 0.0, 25.0);
  // all unbounded and therefore equal
  EXPECT_EQ(select_resource(r, {car(7, 1, 150.0, 25.0), car(8, 1, -50.0, 25.0)}, FileSpec{1000, 100}, m), 8);
  EXPECT_EQ(select_resource(r, {car(9, 1, 50.0, 25.0), car(8, 1, -50.0, 25.0)}, FileSpec{1000, 100}, m), 8);
}

TEST(SelectResource, ArgmaxOracle) {
  const auto m = table_models(5e-3, 250.0);
  Rng rng(31);
  const FileSpec file{50000000, 125000};
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = car(0, 0, 0.0, rng.uniform(17.0, 33.0));
    std::vector<VehicleState> resp;
    const int n = 1 + static_cast<int>(rng.index(6));
    for (int k = 0; k < n; ++k)
      resp.push_back(car(1 + k, 2 + static_cast<int>(rng.index(2)), rng.uniform(-240.0, 240.0),
                         rng.uniform(17.0, 33.0)));
    // capacities recomputed from a bisection exit time
    int best = -1;
    std::int64_t best_cap = -1;
    double best_d = 1e300;
    for (const auto& v : resp) {
      const auto k = KinematicPair::between(r, v);
      if (k.distance() > 250.0) continue;
      const double dt = oracle::bisect_exit(k, 250.0);
      const double e = m.rate(k.distance());
      const std::int64_t cap = static_cast<std::int64_t>(std::floor(e * dt / (8.0 * file.s))) * file.s;
      const double d = k.distance();
      if (cap > best_cap || (cap == best_cap && (d < best_d || (d == best_d && v.id < best)))) {
        best = v.id;
        best_cap = cap;
        best_d = d;
      }
    }
    std::erase_if(resp, [&](const VehicleState& v) { return distance(r, v) > 250.0; });
    if (resp.empty()) continue;
    EXPECT_EQ(select_resource(r, resp, file, m), best) << "trial " << trial;
  }
}

TEST(DirectFeasible, Examples) {
  const auto m = flat_models();
  const auto r = car(0, 0, 0.0, 25.0);
  const auto s = car(1, 2, 100.0, 25.0);  // closing at 50 m/s
  EXPECT_TRUE(direct_feasible(r, s, FileSpec{0, 125000}, m));
  EXPECT_TRUE(direct_feasible(r, car(2, 1, 100.0, 25.0), FileSpec{1LL << 50, 125000}, m));
  const auto cap = link_budget(r, s, FileSpec{1, 125000}, m).capacity;
  // lanes 10 m apart: leaves range once 100 + sqrt(250^2 - 10^2) m have closed at 50 m/s
  const double dt = (100.0 + std::sqrt(250.0 * 250.0 - 100.0)) / 50.0;
  EXPECT_EQ(cap, static_cast<std::int64_t>(std::floor(11e6 * dt / 1e6)) * 125000);
  EXPECT_TRUE(direct_feasible(r, s, FileSpec{cap, 125000}, m));
  EXPECT_FALSE(direct_feasible(r, s, FileSpec{cap + 1, 125000}, m));
}

// ---------------------------------------------------------------------------
// forwarding

TEST(Forwarding, Examples) {
  const auto m = flat_models();
  const auto head = car(0, 0, 0.0, 25.0);
  EXPECT_TRUE(forwarding_feasible(car(1, 3, 0.0, 25.0), head, 0, m));
  EXPECT_TRUE(forwarding_feasible(car(1, 1, 100.0, 25.0), head, 1LL << 50, m));
  EXPECT_FALSE(forwarding_feasible(car(1, 1, 300.0, 25.0), head, 1, m));

  const auto member = car(1, 1, 100.0, 30.0);  // pulls away at 5 m/s
  const double dt = *predict_connection_time(member, head, 250.0).delta_t;
  const double cap = dt * m.link_throughput(distance(member, head)) / 8.0;
  const auto at = static_cast<std::int64_t>(std::floor(cap));
  EXPECT_TRUE(forwarding_feasible(member, head, at, m));
  EXPECT_FALSE(forwarding_feasible(member, head, at + 1, m));
  // time left in the run caps the window
  EXPECT_FALSE(forwarding_feasible(member, head, at, m, dt / 2.0));
}

// ---------------------------------------------------------------------------
// clusters

TEST(Cluster, SingleHelperSuffices) {
  const auto m = flat_models();
  const auto fleet = convoy(3);
  const FileSpec probe{1, 125000};
  const auto alone = plan_downloads(fleet[1], {{fleet[0], -1}}, 1 << 20, probe, m).total;
  const auto with_one =
      plan_downloads(fleet[1], {{fleet[0], -1}, {fleet[2], 0}}, 1 << 20, probe, m).total;
  ASSERT_GT(with_one, alone);
  const FileSpec file{with_one * 125000, 125000};
  EXPECT_FALSE(direct_feasible(fleet[0], fleet[1], file, m));
  const auto c = build_cluster(fleet[0], fleet[1], fleet, file, m);
  EXPECT_EQ(c.n_c(), 1);
  EXPECT_EQ(c.members[0].id, 2);
  EXPECT_EQ(c.covered_frags(), file.n_total());
}

TEST(Cluster, ThreeEqualHelpers) {
  const auto m = flat_models();
  const auto fleet = convoy(3);
  std::vector<Participant> parts{{fleet[0], -1}};
  std::vector<std::int64_t> totals;
  for (int k = 0; k < 3; ++k) {
    parts.push_back({fleet[2 + k], k});
    totals.push_back(plan_downloads(fleet[1], parts, 1 << 20, FileSpec{1, 125000}, m).total);
  }
  // identical geometry per helper: each adds the same number of fragments
  const auto head_only = plan_downloads(fleet[1], {{fleet[0], -1}}, 1 << 20, FileSpec{1, 125000}, m).total;
  EXPECT_EQ(totals[0] - head_only, totals[1] - totals[0]);
  EXPECT_EQ(totals[1] - totals[0], totals[2] - totals[1]);
  const FileSpec file{totals[2] * 125000, 125000};
  const auto c = build_cluster(fleet[0], fleet[1], fleet, file, m);
  EXPECT_EQ(c.n_c(), 3);
  EXPECT_EQ(c.members[1].parent, 2);
  EXPECT_EQ(c.members[2].parent, 3);
}

TEST(Cluster, InsufficientCapacityCarriesPartial) {
  const auto m = flat_models();
  const auto fleet = convoy(2);
  const FileSpec file{1LL << 40, 125000};
  try {
    build_cluster(fleet[0], fleet[1], fleet, file, m);
    FAIL() << "expected InsufficientCapacityError";
  } catch (const InsufficientCapacityError& e) {
    EXPECT_EQ(e.partial.n_c(), 2);
    EXPECT_LT(e.partial.covered_frags(), file.n_total());
  }
}

TEST(Cluster, UnwillingHelpersAreSkipped) {
  auto m = flat_models();
  m.willingness = 0.5;
  const auto fleet = convoy(3);
  ConstantSource never(0.9);
  const FileSpec file{1LL << 40, 125000};
  try {
    build_cluster(fleet[0], fleet[1], fleet, file, m, &never);
    FAIL();
  } catch (const InsufficientCapacityError& e) {
    EXPECT_EQ(e.partial.n_c(), 0);
  }
}

TEST(AssignFragments, OneMemberTakesAll) {
  Cluster c;
  c.head = 0;
  c.head_share.id = 0;
  c.head_share.frags = 0;
  ClusterMember a;
  a.id = 4;
  a.frags = 20;
  a.order = 0;
  c.members.push_back(a);
  const auto plan = assign_fragments(c, FileSpec{8 * 125000, 125000});
  ASSERT_EQ(plan.slices.size(), 1u);
  EXPECT_EQ(plan.slices[0].vehicle, 4);
  EXPECT_EQ(plan.slices[0].first, 1);
  EXPECT_EQ(plan.slices[0].last, 8);
}

TEST(AssignFragments, ContiguousSplit) {
  Cluster c;
  c.head = 0;
  c.head_share.id = 0;
  ClusterMember a, b;
  a.id = 1;
  a.frags = 3;
  a.order = 0;
  b.id = 2;
  b.frags = 5;
  b.order = 1;
  c.members = {a, b};
  const auto plan = assign_fragments(c, FileSpec{8, 1});
  ASSERT_EQ(plan.slices.size(), 2u);
  EXPECT_EQ(plan.slices[0].vehicle, 1);
  EXPECT_EQ(plan.slices[0].first, 1);
  EXPECT_EQ(plan.slices[0].last, 3);
  EXPECT_EQ(plan.slices[1].vehicle, 2);
  EXPECT_EQ(plan.slices[1].first, 4);
  EXPECT_EQ(plan.slices[1].last, 8);
  // service order, not recruitment order, decides
  std::swap(c.members[0].order, c.members[1].order);
  const auto swapped = assign_fragments(c, FileSpec{8, 1});
  EXPECT_EQ(swapped.slices[0].vehicle, 2);
  EXPECT_EQ(swapped.slices[0].last, 5);
}

TEST(Schedule, NearestServedFirst) {
  const auto m = flat_models();
  // resource passing two helpers at once; the nearer one goes first
  const auto s = car(1, 2, 0.0, 25.0);
  const auto head = car(0, 0, -150.0, 25.0);
  std::vector<Participant> parts{{head, -1}, {car(2, 1, 60.0, 25.0), 0}, {car(3, 0, -30.0, 25.0), 0}};
  const auto sched = plan_downloads(s, parts, 1 << 20, FileSpec{1, 125000}, m);
  ASSERT_TRUE(sched.slots[2].served);
  EXPECT_EQ(sched.slots[2].order, 0);
  EXPECT_DOUBLE_EQ(sched.slots[2].start, 0.0);
}

// ---------------------------------------------------------------------------
// randomized scenarios drawn from the simulator

namespace {

struct Case {
  RequestScenario rs;
  Models models;
  FileSpec file;
};

std::vector<Case> random_cases(int count) {
  auto cfg = default_experiment();
  cfg.warmup_steps = 30;
  cfg.snapshots = 1;
  std::vector<Case> out;
  Rng pick(77);
  for (int i = 0; out.size() < static_cast<std::size_t>(count); ++i) {
    const double rho = (5 + static_cast<int>(pick.index(6))) * 1e-3;
    const double range = 250.0 + 50.0 * static_cast<double>(pick.index(8));
    const auto snaps = scenario_snapshots(cfg, rho, 1000 + i);
    auto rs = request_scenario(cfg, snaps[0], rho, range, 1000 + i, 0);
    if (!rs.valid) continue;
    const std::int64_t mbit = 5 + static_cast<std::int64_t>(pick.index(400));
    out.push_back({std::move(rs), cfg.models_at(rho, range), FileSpec{mbit * 125000, 125000}});
  }
  return out;
}

}  // namespace

TEST(ProtocolProperties, RandomScenarios) {
  for (const auto& c : random_cases(60)) {
    const auto& fleet = c.rs.trajectory.front();
    const auto& req = fleet[c.rs.request];
    const std::vector<int> holders{c.rs.holder};
    const auto out = run_cft(req, fleet, holders, c.file, c.models);
    const auto base = run_direct_baseline(req, fleet, holders, c.file, c.models);
    EXPECT_GE(out.bytes_delivered, base.bytes_delivered);
    ASSERT_GE(out.resource, 0);
    const auto& res = fleet[out.resource];
    if (direct_feasible(req, res, c.file, c.models)) {
      EXPECT_EQ(out.mode, Mode::direct);
      EXPECT_FALSE(out.cluster.has_value());
      EXPECT_EQ(base.mode, Mode::direct);
      continue;
    }
    ASSERT_TRUE(out.cluster.has_value());
    const auto& cl = *out.cluster;
    if (out.mode == Mode::clustered) {
      EXPECT_TRUE(partitions(*out.plan, c.file.n_total()));
      EXPECT_GE(cl.covered_frags(), c.file.n_total());
      EXPECT_EQ(out.bytes_delivered, c.file.v_file);
      // every recruitment prefix short of the full cluster falls short
      auto parts = participants_from(cl, fleet);
      for (std::size_t k = 1; k < parts.size(); ++k) {
        std::vector<Participant> prefix(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(k));
        EXPECT_LT(plan_downloads(res, prefix, c.file.n_total(), c.file, c.models).total, c.file.n_total());
      }
    } else {
      EXPECT_LT(out.bytes_delivered, c.file.v_file);
    }
    // assignments never exceed a member's share
    std::map<int, std::int64_t> share{{cl.head, cl.head_share.frags}};
    for (const auto& m : cl.members) share[m.id] = m.frags;
    for (const auto& s : out.plan->slices) EXPECT_LE(s.count(), share[s.vehicle]);
  }
}

TEST(Pipeline, NoHolderFails) {
  const auto m = flat_models();
  const auto fleet = convoy(1);
  const auto out = run_cft(fleet[0], fleet, {}, FileSpec{1000, 100}, m);
  EXPECT_EQ(out.mode, Mode::failed);
  EXPECT_EQ(out.bytes_delivered, 0);
  const auto far = run_cft(fleet[0], {fleet[0], car(1, 2, 2000.0, 25.0)}, {1}, FileSpec{1000, 100}, m);
  EXPECT_EQ(far.mode, Mode::failed);
}

TEST(Pipeline, UnboundedResourceGoesDirect) {
  const auto m = flat_models();
  const Fleet fleet{car(0, 0, 0.0, 25.0), car(1, 1, 50.0, 25.0), car(2, 1, -100.0, 25.0)};
  const auto out = run_cft(fleet[0], fleet, {1}, FileSpec{1LL << 40, 125000}, m);
  EXPECT_EQ(out.mode, Mode::direct);
  EXPECT_EQ(out.bytes_delivered, 1LL << 40);
  EXPECT_FALSE(out.cluster.has_value());
}

TEST(Pipeline, BaselineDiscardsOversizedFiles) {
  const auto m = flat_models();
  const auto fleet = convoy(3);
  const auto cap = link_budget(fleet[0], fleet[1], FileSpec{1, 125000}, m).capacity;
  const auto ok = run_direct_baseline(fleet[0], fleet, {1}, FileSpec{cap, 125000}, m);
  EXPECT_EQ(ok.mode, Mode::direct);
  const auto no = run_direct_baseline(fleet[0], fleet, {1}, FileSpec{cap + 1, 125000}, m);
  EXPECT_EQ(no.mode, Mode::failed);
  EXPECT_EQ(no.bytes_delivered, 0);
  const auto cft = run_cft(fleet[0], fleet, {1}, FileSpec{cap + 1, 125000}, m);
  EXPECT_EQ(cft.mode, Mode::clustered);
  EXPECT_EQ(cft.bytes_delivered, cap + 1);
}

// Walks the plan forward in small time steps along the predicted motion:
// every fragment must finish while its receiver is in range of the sender.
TEST(Pipeline, ScriptedReplay) {
  auto cfg = default_experiment();
  const double rho = 10e-3, range = 250.0;
  const auto models = cfg.models_at(rho, range);
  const FileSpec file{100 * 125000, 125000};
  int clustered = 0;
  for (int seed = 0; seed < 30 && clustered < 5; ++seed) {
    const auto snaps = scenario_snapshots(cfg, rho, seed);
    const auto rs = request_scenario(cfg, snaps[0], rho, range, seed, 0);
    if (!rs.valid) continue;
    const auto& fleet = rs.trajectory.front();
    const auto out = run_cft(fleet[rs.request], fleet, {rs.holder}, file, models);
    if (out.mode != Mode::clustered) continue;
    ++clustered;
    const auto& cl = *out.cluster;
    std::map<int, const ClusterMember*> by_id{{cl.head, &cl.head_share}};
    for (const auto& m : cl.members) by_id[m.id] = &m;
    auto pos = [&](int id, double t) { return models.at(fleet[id], t); };
    auto linked = [&](int a, int b, double t0, double t1) {
      for (double t = t0; t <= t1; t += 1e-3)
        if (models.dist(pos(a, t), pos(b, t)) > range + 1e-6) return false;
      return models.dist(pos(a, t1), pos(b, t1)) <= range + 1e-6;
    };

    std::int64_t delivered = 0;
    for (const auto& s : out.plan->slices) {
      const auto* m = by_id.at(s.vehicle);
      const double e = models.rate(std::max(models.dist(pos(m->id, m->start), pos(cl.resource, m->start)), 1e-3));
      const double per = 8.0 * file.s / e;
      double t = m->start;
      for (auto k = s.first; k <= s.last; ++k) {
        ASSERT_TRUE(linked(m->id, cl.resource, t, t + per)) << "fragment " << k;
        t += per;
      }
      EXPECT_NEAR(t, m->finish, 1e-6);
      const std::int64_t bytes = file.bytes_of(s.last) - file.bytes_of(s.first - 1);
      // relay hops along the recruitment chain
      const std::int64_t carried = file.bytes_of(m->frags);
      int cur = m->id;
      for (int next : m->path) {
        const double r = models.link_throughput(models.dist(pos(cur, t), pos(next, t)));
        const double dur = carried * 8.0 / r;
        ASSERT_TRUE(linked(cur, next, t, t + dur)) << cur << " -> " << next;
        ASSERT_LE(t + dur, cfg.run_duration + 1e-9);
        t += dur;
        cur = next;
      }
      EXPECT_EQ(cur, cl.head);
      delivered += bytes;
    }
    EXPECT_EQ(delivered, out.bytes_delivered);
  }
  EXPECT_GT(clustered, 0);
}
