#include "cft/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "cft/errors.hpp"
#include "cft/units.hpp"

namespace cft {

// ---------------------------------------------------------------------------
// config

void ExperimentConfig::validate() const {
  if (densities.empty()) throw ConfigError("experiment: no densities");
  if (ranges.empty()) throw ConfigError("experiment: no ranges");
  for (double r : ranges)
    if (!(r > 0.0)) throw ConfigError("experiment: ranges must be > 0");
  for (double rho : densities) mobility_at(rho).validate();
  for (auto v : file_sizes)
    if (v <= 0) throw ConfigError("experiment: file sizes must be > 0");
  channel.validate();
  rates.validate();
  mac.validate();
  if (!(rcs_factor > 0.0)) throw ConfigError("mac: rcs_factor must be > 0");
  if (fragment_size <= 0) throw ConfigError("protocol: fragment size must be > 0");
  if (!(willingness > 0.0 && willingness <= 1.0)) throw ConfigError("protocol: willingness must be in (0, 1]");
  if (seeds < 1) throw ConfigError("experiment: need at least one seed");
  if (!(run_duration > 0.0)) throw ConfigError("experiment: run_duration must be > 0");
  if (warmup_steps < 0 || snapshots < 1 || snapshot_interval < 1)
    throw ConfigError("experiment: bad warm-up or snapshot settings");
  if (requests_per_seed < 1 || requests_per_seed > snapshots)
    throw ConfigError("experiment: requests_per_seed must be in [1, snapshots]");
  if (!(success_threshold > 0.0 && success_threshold <= 1.0))
    throw ConfigError("experiment: success_threshold must be in (0, 1]");
  if (!(volume_range > 0.0)) throw ConfigError("experiment: volume_range must be > 0");
  if (volume_max < fragment_size) throw ConfigError("experiment: volume_max below one fragment");
}

MobilityConfig ExperimentConfig::mobility_at(double rho) const {
  MobilityConfig m = mobility;
  m.density = rho;
  return m;
}

Models ExperimentConfig::models_at(double rho, double range) const {
  MacParams m = mac;
  m.rcs = rcs_factor * range;
  Models models(channel, rates, m, range, rho, mobility.lane_length, run_duration);
  models.willingness = willingness;
  return models;
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.rates.rates = {1e6, 2e6, 5.5e6, 11e6};
  // fitted by cft_calibrate at rho = 5/km; see configs/default.conf
  c.rates.thresholds = {units::db_to_linear(-21.0), units::db_to_linear(-20.5), units::db_to_linear(-20.0),
                        units::db_to_linear(45.0)};
  for (int rho = 5; rho <= 10; ++rho) c.densities.push_back(rho * 1e-3);
  for (int r = 250; r <= 600; r += 50) c.ranges.push_back(r);
  for (int v = 50; v <= 500; v += 50) c.file_sizes.push_back(v * 125000LL);
  return c;
}

const char* to_string(MetricKind k) {
  switch (k) {
    case MetricKind::connection_time: return "connection-time";
    case MetricKind::throughput: return "throughput";
    case MetricKind::capability: return "capacity";
    case MetricKind::max_volume_cft: return "max-volume-cft";
    case MetricKind::max_volume_direct: return "max-volume-direct";
    case MetricKind::cluster_size: return "cluster-size";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// plumbing

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  unsigned t = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  t = std::max(1u, std::min<unsigned>(t, static_cast<unsigned>(n)));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  for (unsigned k = 0; k < t; ++k)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::vector<Fleet> scenario_snapshots(const ExperimentConfig& c, double rho, int seed) {
  const auto mc = c.mobility_at(rho);
  Rng rng({c.base_seed, static_cast<std::uint64_t>(seed), grid_key(rho), grid_key(mc.safety_distance), 1});
  Fleet fleet = init_scenario(mc, rng);
  for (int k = 0; k < c.warmup_steps; ++k) step(fleet, mc, rng);
  std::vector<Fleet> out;
  for (int j = 0; j < c.snapshots; ++j) {
    if (j > 0)
      for (int k = 0; k < c.snapshot_interval; ++k) step(fleet, mc, rng);
    out.push_back(fleet);
  }
  return out;
}

namespace {

bool opposite(const VehicleState& a, const VehicleState& b) { return a.direction != b.direction; }

}  // namespace

RequestScenario request_scenario(const ExperimentConfig& c, const Fleet& snapshot, double rho, double range,
                                 int seed, int request_index) {
  RequestScenario rs;
  const double L = c.mobility.lane_length;
  Rng pick({c.base_seed, static_cast<std::uint64_t>(seed), grid_key(rho), grid_key(range),
            static_cast<std::uint64_t>(request_index), 2});
  // request vehicles are those with an oncoming vehicle in range
  std::vector<int> candidates;
  for (const auto& v : snapshot)
    for (const auto& w : snapshot)
      if (opposite(v, w) && ring_distance(v, w, L) <= range) {
        candidates.push_back(v.id);
        break;
      }
  if (candidates.empty()) return rs;
  rs.request = candidates[pick.index(candidates.size())];
  std::vector<int> holders;
  for (const auto& w : snapshot)
    if (opposite(snapshot[rs.request], w) && ring_distance(snapshot[rs.request], w, L) <= range)
      holders.push_back(w.id);
  rs.holder = holders[pick.index(holders.size())];

  const auto mc = c.mobility_at(rho);
  Rng mob({c.base_seed, static_cast<std::uint64_t>(seed), grid_key(rho), grid_key(range),
           static_cast<std::uint64_t>(request_index), 3});
  const int steps = static_cast<int>(std::ceil(c.run_duration / mc.dt));
  rs.trajectory.reserve(steps + 1);
  rs.trajectory.push_back(snapshot);
  Fleet f = snapshot;
  for (int k = 0; k < steps; ++k) {
    step(f, mc, mob);
    rs.trajectory.push_back(f);
  }
  rs.valid = true;
  return rs;
}

// ---------------------------------------------------------------------------
// validation against the realised mobility

namespace {

struct Tracker {
  const RequestScenario& rs;
  const Models& models;
  double dt;

  VehicleState at(int id, double t) const {
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / dt)));
    k = std::min(k, rs.trajectory.size() - 1);
    return extrapolate(rs.trajectory[k][id], t - k * dt, models.ring_length());
  }
  // Motion is linear between steps, so distance is convex there and checking
  // the step instants plus both ends is exact.
  bool connected(int a, int b, double t0, double t1) const {
    const double lim = models.range() * (1.0 + 1e-9);
    auto ok = [&](double t) { return models.dist(at(a, t), at(b, t)) <= lim; };
    if (!ok(t0) || !ok(t1)) return false;
    for (double t = (std::floor(t0 / dt) + 1.0) * dt; t < t1; t += dt)
      if (!ok(t)) return false;
    return true;
  }
};

}  // namespace

Validation validate_outcome(const TransferOutcome& out, const RequestScenario& rs, const FileSpec& file,
                            const Models& models, double dt) {
  Validation v;
  if (!rs.valid || out.resource < 0) {
    v.ok = false;
    return v;
  }
  Tracker tr{rs, models, dt};
  const int head = rs.request;
  if (out.mode == Mode::direct) {
    v.ok = tr.connected(head, out.resource, 0.0, out.timeline.download);
    v.bytes = v.ok ? out.bytes_delivered : 0;
    return v;
  }
  if (!out.cluster || !out.plan) {
    v.ok = false;
    return v;
  }
  std::map<int, std::int64_t> assigned;
  for (const auto& s : out.plan->slices)
    assigned[s.vehicle] += std::min(s.last * file.s, file.v_file) - (s.first - 1) * file.s;

  const auto& c = *out.cluster;
  std::vector<const ClusterMember*> all{&c.head_share};
  for (const auto& m : c.members) all.push_back(&m);
  bool all_ok = out.mode == Mode::clustered;
  for (const auto* m : all) {
    const auto it = assigned.find(m->id);
    if (it == assigned.end() || it->second <= 0) continue;
    bool ok = tr.connected(m->id, c.resource, m->start, m->finish);
    // replay the relay chain with the planner's predicted hop durations
    const std::int64_t planned_bytes = file.bytes_of(m->frags);
    double tau = m->finish;
    int cur = m->id;
    for (int next : m->path) {
      if (!ok) break;
      const auto a = models.at(rs.trajectory[0][cur], tau);
      const auto b = models.at(rs.trajectory[0][next], tau);
      const double dur = planned_bytes * 8.0 / models.link_throughput(models.dist(a, b));
      ok = tr.connected(cur, next, tau, tau + dur);
      tau += dur;
      cur = next;
    }
    if (ok) v.bytes += it->second;
    all_ok = all_ok && ok;
  }
  v.ok = all_ok;
  return v;
}

// ---------------------------------------------------------------------------
// aggregation

std::vector<GridRow> aggregate(const SweepResult& r, double theta) {
  using Key = std::tuple<double, double, std::int64_t>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  std::vector<Key> order;
  for (const auto& rec : r.records) {
    Key k{rec.rho, rec.range, rec.v_file};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&rec);
  }
  const bool quantile = r.kind == MetricKind::max_volume_cft || r.kind == MetricKind::max_volume_direct;
  std::vector<GridRow> rows;
  for (const auto& k : order) {
    const auto& g = groups[k];
    GridRow row{std::get<0>(k), std::get<1>(k), std::get<2>(k), 0.0, 0};
    if (quantile) {
      std::vector<double> caps;
      for (const auto* rec : g)
        if (rec->count > 0) caps.push_back(rec->sum);
      std::sort(caps.begin(), caps.end(), std::greater<>());
      row.samples = caps.size();
      if (!caps.empty()) {
        // largest V that at least a fraction theta of the runs can carry
        const auto need = static_cast<std::size_t>(std::ceil(theta * caps.size() - 1e-9));
        row.value = caps[std::max<std::size_t>(need, 1) - 1];
      }
    } else {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto* rec : g) {
        sum += rec->sum;
        n += rec->count;
      }
      row.samples = n;
      row.value = n ? sum / n : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// pair sweeps

namespace {

struct GridModels {
  std::vector<Models> models;  // index: rho * ranges + range
  std::size_t n_ranges;
  const Models& at(std::size_t rho_i, std::size_t r_i) const { return models[rho_i * n_ranges + r_i]; }
};

GridModels build_models(const ExperimentConfig& c, const std::vector<double>& ranges) {
  GridModels g{{}, ranges.size()};
  for (double rho : c.densities)
    for (double r : ranges) g.models.push_back(c.models_at(rho, r));
  return g;
}

enum class PairMetric { connection_time, throughput, capability };

SweepResult pair_sweep(const ExperimentConfig& c, PairMetric metric) {
  c.validate();
  const auto grid = build_models(c, c.ranges);
  const std::size_t nr = c.ranges.size();
  const std::size_t tasks = c.densities.size() * static_cast<std::size_t>(c.seeds);
  std::vector<std::vector<RunRecord>> per_task(tasks);
  const double L = c.mobility.lane_length;
  const double H = c.run_duration;

  parallel_for(tasks, c.threads, [&](std::size_t t) {
    const std::size_t ri = t / c.seeds;
    const int seed = static_cast<int>(t % c.seeds);
    const double rho = c.densities[ri];
    std::vector<RunRecord> recs(nr);
    for (std::size_t k = 0; k < nr; ++k) {
      recs[k].rho = rho;
      recs[k].range = c.ranges[k];
      recs[k].seed = seed;
    }
    for (const auto& fleet : scenario_snapshots(c, rho, seed)) {
      if (metric == PairMetric::throughput) {
        // every vehicle to its nearest neighbour travelling the same way; a
        // vehicle with nobody in range has no forwarding link and counts as 0
        for (const auto& v : fleet) {
          double best = std::numeric_limits<double>::infinity();
          for (const auto& w : fleet)
            if (w.id != v.id && w.direction == v.direction) best = std::min(best, ring_distance(v, w, L));
          for (std::size_t k = 0; k < nr; ++k) {
            if (best <= c.ranges[k]) recs[k].sum += grid.at(ri, k).link_throughput(best);
            recs[k].count += 1;
          }
        }
        continue;
      }
      // oncoming pairs currently in range
      for (std::size_t i = 0; i < fleet.size(); ++i)
        for (std::size_t j = i + 1; j < fleet.size(); ++j) {
          if (!opposite(fleet[i], fleet[j])) continue;
          const auto pair = KinematicPair::between(fleet[i], fleet[j], L);
          const double d = pair.distance();
          for (std::size_t k = 0; k < nr; ++k) {
            if (d > c.ranges[k]) continue;
            const double dt = predict_connection_time(pair, c.ranges[k]).capped(H);
            double value = dt;
            if (metric == PairMetric::capability) {
              const double e = grid.at(ri, k).rate(std::max(d, 1e-3));
              value = static_cast<double>(
                  make_link_budget(e, ConnectionPrediction{dt}, c.fragment_size).capacity);
            }
            recs[k].sum += value;
            recs[k].count += 1;
          }
        }
    }
    per_task[t] = std::move(recs);
  });

  SweepResult out;
  for (auto& v : per_task)
    for (auto& r : v) out.records.push_back(r);
  // records are grouped by rho then seed; order rows by (rho, range)
  std::stable_sort(out.records.begin(), out.records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.rho, a.range) < std::tie(b.rho, b.range);
  });
  out.rows = aggregate(out, c.success_threshold);
  return out;
}

}  // namespace

SweepResult connection_time_sweep(const ExperimentConfig& c) {
  auto r = pair_sweep(c, PairMetric::connection_time);
  r.kind = MetricKind::connection_time;
  r.value_name = "avg_connection_time_s";
  return r;
}

SweepResult throughput_sweep(const ExperimentConfig& c) {
  auto r = pair_sweep(c, PairMetric::throughput);
  r.kind = MetricKind::throughput;
  r.value_name = "avg_throughput_bps";
  return r;
}

SweepResult capability_sweep(const ExperimentConfig& c) {
  auto r = pair_sweep(c, PairMetric::capability);
  r.kind = MetricKind::capability;
  r.value_name = "avg_capability_bytes";
  return r;
}

// ---------------------------------------------------------------------------
// protocol sweeps

namespace {

struct RunSetup {
  double rho;
  int seed;
  int request;
};

std::vector<RunSetup> run_setups(const ExperimentConfig& c) {
  std::vector<RunSetup> s;
  for (double rho : c.densities)
    for (int seed = 0; seed < c.seeds; ++seed)
      for (int j = 0; j < c.requests_per_seed; ++j) s.push_back({rho, seed, j});
  return s;
}

// Scenario for one run setup; snapshots of one (rho, seed) are shared by its requests.
RequestScenario scenario_for(const ExperimentConfig& c, const RunSetup& s) {
  const auto snaps = scenario_snapshots(c, s.rho, s.seed);
  return request_scenario(c, snaps[s.request], s.rho, c.volume_range, s.seed, s.request);
}

TransferOutcome attempt(const ExperimentConfig& c, const RequestScenario& rs, const FileSpec& file,
                        const Models& models, bool cft, int seed, int request) {
  const auto& fleet = rs.trajectory.front();
  const std::vector<int> holders{rs.holder};
  if (!cft) return run_direct_baseline(fleet[rs.request], fleet, holders, file, models);
  Rng will({c.base_seed, static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(request), 4});
  return run_cft(fleet[rs.request], fleet, holders, file, models, &will);
}

}  // namespace

SweepResult max_transfer_volume(const ExperimentConfig& c, bool cft) {
  c.validate();
  const auto setups = run_setups(c);
  std::vector<Models> models;
  for (double rho : c.densities) models.push_back(c.models_at(rho, c.volume_range));
  auto models_for = [&](double rho) -> const Models& {
    const auto it = std::find(c.densities.begin(), c.densities.end(), rho);
    return models[static_cast<std::size_t>(it - c.densities.begin())];
  };

  std::vector<RunRecord> recs(setups.size());
  parallel_for(setups.size(), c.threads, [&](std::size_t i) {
    const auto& s = setups[i];
    RunRecord& rec = recs[i];
    rec.rho = s.rho;
    rec.range = c.volume_range;
    rec.seed = s.seed;
    rec.request = s.request;
    const auto rs = scenario_for(c, s);
    if (!rs.valid) return;  // count stays 0: no oncoming vehicle anywhere
    const auto& m = models_for(s.rho);

    auto run = [&](std::int64_t k, TransferOutcome* keep) {
      const FileSpec file{k * c.fragment_size, c.fragment_size};
      auto out = attempt(c, rs, file, m, cft, s.seed, s.request);
      bool ok = out.mode != Mode::failed;
      if (ok && c.success_basis == SuccessBasis::validated)
        ok = validate_outcome(out, rs, file, m, c.mobility.dt).ok;
      if (keep) *keep = std::move(out);
      return ok;
    };
    // largest whole-fragment volume this run delivers
    std::int64_t lo = 0, hi = c.volume_max / c.fragment_size + 1;
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      (run(mid, nullptr) ? lo : hi) = mid;
    }
    TransferOutcome best;
    if (lo > 0) run(lo, &best);
    rec.sum = static_cast<double>(lo * c.fragment_size);
    rec.count = 1;
    rec.mode = lo > 0 ? best.mode : Mode::failed;
    rec.n_c = best.cluster ? best.cluster->n_c() : 0;
    rec.bytes = lo * c.fragment_size;
    rec.download_s = best.timeline.download;
    rec.forwarding_s = best.timeline.forwarding;
  });

  SweepResult out;
  out.kind = cft ? MetricKind::max_volume_cft : MetricKind::max_volume_direct;
  out.value_name = "max_volume_bytes";
  out.records = std::move(recs);
  out.rows = aggregate(out, c.success_threshold);
  return out;
}

SweepResult cluster_size_profile(const ExperimentConfig& c) {
  c.validate();
  if (c.file_sizes.empty()) throw ConfigError("experiment: cluster-size sweep needs file sizes");
  const auto setups = run_setups(c);
  std::vector<Models> models;
  for (double rho : c.densities) models.push_back(c.models_at(rho, c.volume_range));
  const std::size_t nv = c.file_sizes.size();
  std::vector<RunRecord> recs(setups.size() * nv);

  parallel_for(setups.size(), c.threads, [&](std::size_t i) {
    const auto& s = setups[i];
    const auto rs = scenario_for(c, s);
    const auto idx = static_cast<std::size_t>(std::find(c.densities.begin(), c.densities.end(), s.rho) -
                                              c.densities.begin());
    for (std::size_t k = 0; k < nv; ++k) {
      RunRecord& rec = recs[i * nv + k];
      rec.rho = s.rho;
      rec.range = c.volume_range;
      rec.v_file = c.file_sizes[k];
      rec.seed = s.seed;
      rec.request = s.request;
      if (!rs.valid) continue;
      const FileSpec file{c.file_sizes[k], c.fragment_size};
      const auto out = attempt(c, rs, file, models[idx], true, s.seed, s.request);
      rec.mode = out.mode;
      rec.n_c = out.cluster ? out.cluster->n_c() : 0;
      rec.sum = rec.n_c;
      rec.count = 1;
      rec.bytes = out.bytes_delivered;
      rec.download_s = out.timeline.download;
      rec.forwarding_s = out.timeline.forwarding;
      rec.validated = validate_outcome(out, rs, file, models[idx], c.mobility.dt).ok;
    }
  });

  SweepResult out;
  out.kind = MetricKind::cluster_size;
  out.value_name = "avg_cluster_size";
  out.records = std::move(recs);
  std::stable_sort(out.records.begin(), out.records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.rho, a.v_file) < std::tie(b.rho, b.v_file);
  });
  out.rows = aggregate(out, c.success_threshold);
  return out;
}

SweepResult run_sweep(const ExperimentConfig& c, MetricKind kind) {
  switch (kind) {
    case MetricKind::connection_time: return connection_time_sweep(c);
    case MetricKind::throughput: return throughput_sweep(c);
    case MetricKind::capability: return capability_sweep(c);
    case MetricKind::max_volume_cft: return max_transfer_volume(c, true);
    case MetricKind::max_volume_direct: return max_transfer_volume(c, false);
    case MetricKind::cluster_size: return cluster_size_profile(c);
  }
  throw ConfigError("unknown metric");
}

}  // namespace cft
