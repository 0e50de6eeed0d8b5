#include "cft/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "cft/errors.hpp"

namespace cft {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;
}  // namespace

// ---------------------------------------------------------------------------
// file, models, budgets

std::int64_t FileSpec::bytes_of(std::int64_t k) const {
  if (k <= 0) return 0;
  if (k >= n_total()) return std::max<std::int64_t>(v_file, 0);
  return k * s;
}

void FileSpec::validate() const {
  if (s <= 0) throw ConfigError("file: fragment size must be > 0");
  if (v_file < 0) throw ConfigError("file: size must be >= 0");
}

Models::Models(ChannelParams channel, RateTable rates, MacParams mac, double range, double rho,
               double ring_length, std::optional<double> horizon)
    : mac_(mac), range_(range), rho_(rho), ring_length_(ring_length), horizon_(horizon) {
  channel.validate();
  rates.validate();
  mac.validate();
  if (!(range > 0.0)) throw ConfigError("models: range must be > 0");
  curve_ = std::make_shared<const RateCurve>(std::move(channel), std::move(rates), 2.0 * range + 10.0);
  thr_ = std::make_shared<const ThroughputModel>(rho, mac);
  auto table = std::make_shared<std::vector<double>>(curve_->size());
  for (std::size_t i = 0; i < table->size(); ++i) (*table)[i] = (*thr_)(curve_->at_node(i));
  thr_by_node_ = std::move(table);
}

double Models::link_throughput(double d) const {
  const auto i = curve_->node(d);
  return i != RateCurve::npos ? (*thr_by_node_)[i] : mac_throughput(rate(d));
}

bool Models::in_range(const VehicleState& i, const VehicleState& j) const {
  return dist(i, j) <= range_;
}

LinkBudget make_link_budget(double e_c, const ConnectionPrediction& window, std::int64_t s,
                            std::optional<double> horizon) {
  LinkBudget lb;
  lb.e_c = e_c;
  if (window.unbounded() && !horizon) {
    lb.unbounded = true;
    lb.delta_t = kInf;
    lb.n_frags = e_c > 0.0 ? kUnboundedBytes / s : 0;
    lb.capacity = e_c > 0.0 ? kUnboundedBytes : 0;
    lb.t0 = e_c > 0.0 ? kInf : 0.0;
    lb.t_resid = e_c > 0.0 ? 0.0 : kInf;
    return lb;
  }
  lb.delta_t = horizon ? window.capped(std::max(*horizon, 0.0)) : *window.delta_t;
  lb.n_frags = e_c > 0.0 ? static_cast<std::int64_t>(std::floor(e_c * lb.delta_t / (8.0 * s))) : 0;
  lb.capacity = lb.n_frags * s;
  lb.t0 = e_c > 0.0 ? lb.n_frags * 8.0 * s / e_c : 0.0;
  lb.t_resid = std::max(lb.delta_t - lb.t0, 0.0);
  return lb;
}

LinkBudget link_budget(const VehicleState& i, const VehicleState& source, const FileSpec& file,
                       const Models& models) {
  const auto pair = models.pair(i, source);
  const auto window = predict_connection_time(pair, models.range());  // throws when out of range
  return make_link_budget(models.rate(pair.distance()), window, file.s, models.horizon());
}

int select_resource(const VehicleState& request, const std::vector<VehicleState>& responders,
                    const FileSpec& file, const Models& models) {
  if (responders.empty()) throw NoResourceError("select_resource: nobody answered the request");
  const VehicleState* best = nullptr;
  std::int64_t best_cap = -1;
  double best_d = kInf;
  for (const auto& r : responders) {
    const std::int64_t cap = link_budget(request, r, file, models).capacity;
    const double d = models.dist(request, r);
    const bool better = cap > best_cap || (cap == best_cap && (d < best_d || (d == best_d && r.id < best->id)));
    if (better) {
      best = &r;
      best_cap = cap;
      best_d = d;
    }
  }
  return best->id;
}

bool direct_feasible(const VehicleState& request, const VehicleState& resource, const FileSpec& file,
                     const Models& models) {
  if (file.v_file <= 0) return true;
  return link_budget(request, resource, file, models).capacity >= file.v_file;
}

bool forwarding_feasible(const VehicleState& member, const VehicleState& head,
                         std::int64_t assigned_bytes, const Models& models, double time_left) {
  if (assigned_bytes <= 0) return true;
  const auto pair = models.pair(member, head);
  if (pair.distance() > models.range()) return false;
  const auto window = predict_connection_time(pair, models.range());
  if (window.unbounded() && std::isinf(time_left)) return true;
  const double dt = window.capped(std::max(time_left, 0.0));
  const double r_thr = models.link_throughput(pair.distance());
  return dt * r_thr / 8.0 >= static_cast<double>(assigned_bytes);
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::direct: return "direct";
    case Mode::clustered: return "clustered";
    case Mode::failed: return "failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// download schedule

namespace {

struct Window {
  double enter = kInf;
  double exit = -kInf;
  bool ever = false;
};

// Store-and-forward along the recruitment chain, starting at t. Returns the
// total relay time, or a negative value if some hop cannot carry the bytes.
double relay_time(const std::vector<Participant>& parts, int who, std::int64_t bytes, double t,
                  double horizon, const Models& models) {
  double tau = t;
  int cur = who;
  while (parts[cur].parent >= 0) {
    const int next = parts[cur].parent;
    const auto a = models.at(parts[cur].state, tau);
    const auto b = models.at(parts[next].state, tau);
    if (!forwarding_feasible(a, b, bytes, models, horizon - tau)) return -1.0;
    const double r_thr = models.link_throughput(models.dist(a, b));
    tau += bytes * 8.0 / r_thr;
    cur = next;
  }
  return tau - t;
}

}  // namespace

DownloadSchedule plan_downloads(const VehicleState& resource, const std::vector<Participant>& parts,
                                std::int64_t needed, const FileSpec& file, const Models& models) {
  const double horizon = models.horizon().value_or(kInf);
  const std::size_t n = parts.size();
  std::vector<Window> win(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cw = contact_window(models.pair(parts[i].state, resource), models.range());
    if (!cw) continue;
    win[i].ever = true;
    win[i].enter = cw->enter;
    win[i].exit = std::min(cw->exit.value_or(kInf), horizon);
  }

  DownloadSchedule out;
  out.slots.resize(n);
  std::int64_t remaining = needed;
  double t = 0.0;
  int order = 0;
  while (remaining > 0) {
    // nearest participant in range now; otherwise jump to the next arrival
    int pick = -1;
    double pick_d = kInf;
    double next_enter = kInf;
    const auto src = models.at(resource, t);
    for (std::size_t i = 0; i < n; ++i) {
      if (out.slots[i].served || !win[i].ever || win[i].exit <= t + kTimeEps) continue;
      if (win[i].enter > t + kTimeEps) {
        next_enter = std::min(next_enter, win[i].enter);
        continue;
      }
      const double d = models.dist(models.at(parts[i].state, t), src);
      if (d < pick_d || (d == pick_d && parts[i].state.id < parts[pick].state.id)) {
        pick = static_cast<int>(i);
        pick_d = d;
      }
    }
    if (pick < 0) {
      if (next_enter >= horizon || std::isinf(next_enter)) break;
      t = next_enter;
      continue;
    }

    auto& slot = out.slots[pick];
    slot.served = true;
    const double e_c = models.rate(std::max(pick_d, 1e-3));
    ConnectionPrediction remain{std::isinf(win[pick].exit) ? std::nullopt
                                                           : std::optional<double>(win[pick].exit - t)};
    slot.budget = make_link_budget(e_c, remain, file.s);
    std::int64_t k = std::min(slot.budget.n_frags, remaining);
    const double frag_time = e_c > 0.0 ? 8.0 * file.s / e_c : kInf;

    double fwd = 0.0;
    if (parts[pick].parent >= 0 && k > 0) {
      // largest k whose fragments can also be relayed to the head
      auto relay = [&](std::int64_t m) {
        return relay_time(parts, pick, file.bytes_of(m), t + m * frag_time, horizon, models);
      };
      if (relay(k) < 0.0) {
        std::int64_t lo = 0, hi = k;
        while (hi - lo > 1) {
          const std::int64_t mid = lo + (hi - lo) / 2;
          (relay(mid) >= 0.0 ? lo : hi) = mid;
        }
        k = lo;
      }
      if (k > 0) fwd = relay(k);
    }
    if (k <= 0) continue;

    slot.order = order++;
    slot.frags = k;
    slot.start = t;
    slot.finish = t + k * frag_time;
    slot.forward_time = fwd;
    remaining -= k;
    out.total += k;
    t = slot.finish;
  }
  return out;
}

// ---------------------------------------------------------------------------
// cluster

std::int64_t Cluster::covered_frags() const {
  std::int64_t c = head_share.frags;
  for (const auto& m : members) c += m.frags;
  return c;
}

namespace {

ClusterMember member_from(const Participant& p, const DownloadSlot& slot,
                          const std::vector<Participant>& parts) {
  ClusterMember m;
  m.id = p.state.id;
  m.parent = p.parent >= 0 ? parts[p.parent].state.id : -1;
  m.budget = slot.budget;
  m.frags = slot.frags;
  m.order = slot.order;
  m.start = slot.start;
  m.finish = slot.finish;
  m.forward_time = slot.forward_time;
  for (int k = p.parent; k >= 0; k = parts[k].parent) m.path.push_back(parts[k].state.id);
  return m;
}

Cluster make_cluster(const VehicleState& head, const VehicleState& resource,
                     const std::vector<Participant>& parts, const DownloadSchedule& sched) {
  Cluster c;
  c.head = head.id;
  c.resource = resource.id;
  c.head_share = member_from(parts[0], sched.slots[0], parts);
  for (std::size_t i = 1; i < parts.size(); ++i)
    c.members.push_back(member_from(parts[i], sched.slots[i], parts));
  return c;
}

}  // namespace

Cluster build_cluster(const VehicleState& head, const VehicleState& resource, const Fleet& fleet,
                      const FileSpec& file, const Models& models, RandomSource* rng) {
  const std::int64_t needed = file.n_total();
  std::vector<Participant> parts{{head, -1}};
  DownloadSchedule best = plan_downloads(resource, parts, needed, file, models);
  if (best.total >= needed) return make_cluster(head, resource, parts, best);

  std::unordered_set<int> seen{head.id, resource.id};
  std::vector<int> frontier{0};  // participant indices that broadcast this round
  while (!frontier.empty()) {
    // Everyone hearing a frontier member; the nearest frontier member recruits.
    struct Candidate {
      std::size_t fleet_index;
      int parent;
      double to_resource;
    };
    std::vector<Candidate> ring;
    for (std::size_t v = 0; v < fleet.size(); ++v) {
      if (seen.count(fleet[v].id)) continue;
      int parent = -1;
      double pd = kInf;
      for (int f : frontier) {
        const double d = models.dist(fleet[v], parts[f].state);
        if (d <= models.range() && d < pd) {
          pd = d;
          parent = f;
        }
      }
      if (parent >= 0) ring.push_back({v, parent, models.dist(fleet[v], resource)});
    }
    std::sort(ring.begin(), ring.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.to_resource != b.to_resource) return a.to_resource < b.to_resource;
      return fleet[a.fleet_index].id < fleet[b.fleet_index].id;
    });

    std::vector<int> next;
    for (const auto& c : ring) {
      seen.insert(fleet[c.fleet_index].id);
      if (rng && models.willingness < 1.0 && rng->unit() >= models.willingness) continue;
      parts.push_back({fleet[c.fleet_index], c.parent});
      auto trial = plan_downloads(resource, parts, needed, file, models);
      if (trial.total <= best.total) {
        parts.pop_back();
        continue;
      }
      best = std::move(trial);
      next.push_back(static_cast<int>(parts.size()) - 1);
      if (best.total >= needed) return make_cluster(head, resource, parts, best);
    }
    frontier = std::move(next);
  }
  throw InsufficientCapacityError(make_cluster(head, resource, parts, best));
}

TransferPlan assign_fragments(const Cluster& cluster, const FileSpec& file) {
  std::vector<const ClusterMember*> seq{&cluster.head_share};
  for (const auto& m : cluster.members) seq.push_back(&m);
  // download order; participants never scheduled keep their recruitment position
  std::stable_sort(seq.begin(), seq.end(), [](const ClusterMember* a, const ClusterMember* b) {
    const int oa = a->order < 0 ? std::numeric_limits<int>::max() : a->order;
    const int ob = b->order < 0 ? std::numeric_limits<int>::max() : b->order;
    return oa < ob;
  });
  TransferPlan plan;
  std::int64_t next = 1;
  const std::int64_t n = file.n_total();
  for (const auto* m : seq) {
    if (next > n) break;
    const std::int64_t k = std::min(m->frags, n - next + 1);
    if (k <= 0) continue;
    plan.slices.push_back({m->id, next, next + k - 1});
    next += k;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

std::vector<VehicleState> responders_of(const VehicleState& request, const Fleet& fleet,
                                        const std::vector<int>& holders, const Models& models) {
  std::unordered_set<int> h(holders.begin(), holders.end());
  std::vector<VehicleState> out;
  for (const auto& v : fleet)
    if (v.id != request.id && h.count(v.id) && models.in_range(request, v)) out.push_back(v);
  return out;
}

const VehicleState& by_id(const std::vector<VehicleState>& vs, int id) {
  for (const auto& v : vs)
    if (v.id == id) return v;
  throw std::logic_error("vehicle id not found");
}

void fill_timeline(TransferOutcome& out, const Cluster& c) {
  double dl = 0.0, total = 0.0;
  auto take = [&](const ClusterMember& m) {
    if (m.frags <= 0) return;
    dl = std::max(dl, m.finish);
    total = std::max(total, m.finish + m.forward_time);
  };
  take(c.head_share);
  for (const auto& m : c.members) take(m);
  out.timeline = {dl, total - dl, total};
}

}  // namespace

TransferOutcome run_cft(const VehicleState& request, const Fleet& fleet, const std::vector<int>& holders,
                        const FileSpec& file, const Models& models, RandomSource* rng) {
  TransferOutcome out;
  const auto responders = responders_of(request, fleet, holders, models);
  if (responders.empty()) return out;
  out.resource = select_resource(request, responders, file, models);
  const auto& resource = by_id(responders, out.resource);
  const auto direct = link_budget(request, resource, file, models);
  out.direct_capacity = direct.capacity;

  if (file.v_file <= 0 || direct.capacity >= file.v_file) {
    out.mode = Mode::direct;
    out.bytes_delivered = std::max<std::int64_t>(file.v_file, 0);
    out.timeline.download = direct.e_c > 0.0 ? out.bytes_delivered * 8.0 / direct.e_c : 0.0;
    out.timeline.total = out.timeline.download;
    return out;
  }

  try {
    auto cluster = build_cluster(request, resource, fleet, file, models, rng);
    out.plan = assign_fragments(cluster, file);
    out.mode = Mode::clustered;
    out.bytes_delivered = file.v_file;
    fill_timeline(out, cluster);
    out.cluster = std::move(cluster);
  } catch (InsufficientCapacityError& e) {
    out.mode = Mode::failed;
    out.plan = assign_fragments(e.partial, file);
    std::int64_t k = 0;
    for (const auto& s : out.plan->slices) k += s.count();
    out.bytes_delivered = file.bytes_of(k);
    fill_timeline(out, e.partial);
    out.cluster = std::move(e.partial);
  }
  return out;
}

TransferOutcome run_direct_baseline(const VehicleState& request, const Fleet& fleet,
                                    const std::vector<int>& holders, const FileSpec& file,
                                    const Models& models) {
  TransferOutcome out;
  const auto responders = responders_of(request, fleet, holders, models);
  if (responders.empty()) return out;
  out.resource = select_resource(request, responders, file, models);
  const auto direct = link_budget(request, by_id(responders, out.resource), file, models);
  out.direct_capacity = direct.capacity;
  if (file.v_file <= 0 || direct.capacity >= file.v_file) {
    out.mode = Mode::direct;
    out.bytes_delivered = std::max<std::int64_t>(file.v_file, 0);
    out.timeline.download = direct.e_c > 0.0 ? out.bytes_delivered * 8.0 / direct.e_c : 0.0;
    out.timeline.total = out.timeline.download;
  }
  return out;
}

}  // namespace cft
