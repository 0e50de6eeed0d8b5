#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cft/channel.hpp"
#include "cft/connection.hpp"
#include "cft/mac.hpp"
#include "cft/mobility.hpp"
#include "cft/random.hpp"

namespace cft {

inline constexpr std::int64_t kUnboundedBytes = std::numeric_limits<std::int64_t>::max();

struct FileSpec {
  std::int64_t v_file = 0;  // bytes
  std::int64_t s = 125000;  // fragment size, bytes

  // ceil(v_file / s); the last fragment may be short.
  std::int64_t n_total() const { return v_file <= 0 ? 0 : (v_file + s - 1) / s; }
  // Bytes carried by the first k fragments.
  std::int64_t bytes_of(std::int64_t k) const;
  void validate() const;
};

// Everything a protocol decision needs besides vehicle states.
class Models {
 public:
  Models(ChannelParams channel, RateTable rates, MacParams mac, double range, double rho,
         double ring_length = 0.0, std::optional<double> horizon = std::nullopt);

  double range() const { return range_; }
  double rho() const { return rho_; }
  double ring_length() const { return ring_length_; }
  const std::optional<double>& horizon() const { return horizon_; }
  const MacParams& mac() const { return mac_; }
  const RateCurve& curve() const { return *curve_; }

  // Probability that a candidate agrees to help; 1 by default.
  double willingness = 1.0;

  double rate(double d) const { return (*curve_)(d); }
  double mac_throughput(double data_rate) const { return (*thr_)(data_rate); }
  // mac_throughput(rate(d)), tabulated on the rate curve's grid.
  double link_throughput(double d) const;
  KinematicPair pair(const VehicleState& i, const VehicleState& j) const {
    return KinematicPair::between(i, j, ring_length_);
  }
  double dist(const VehicleState& i, const VehicleState& j) const {
    return ring_distance(i, j, ring_length_);
  }
  bool in_range(const VehicleState& i, const VehicleState& j) const;
  VehicleState at(const VehicleState& v, double t) const { return extrapolate(v, t, ring_length_); }

 private:
  MacParams mac_;
  double range_;
  double rho_;
  double ring_length_;
  std::optional<double> horizon_;
  std::shared_ptr<const RateCurve> curve_;
  std::shared_ptr<const ThroughputModel> thr_;
  std::shared_ptr<const std::vector<double>> thr_by_node_;
};

struct LinkBudget {
  double delta_t = 0.0;  // s; infinite when unbounded
  bool unbounded = false;
  double e_c = 0.0;  // bit/s
  std::int64_t n_frags = 0;
  std::int64_t capacity = 0;  // bytes
  double t0 = 0.0;
  double t_resid = 0.0;
};

// n = floor(e_c * dt / 8s). With no horizon an unbounded link has unbounded capacity.
LinkBudget make_link_budget(double e_c, const ConnectionPrediction& window, std::int64_t s,
                            std::optional<double> horizon = std::nullopt);

// One vehicle's part in a cluster. V_data for the member is `frags` fragments:
// what the resource can hand it in its turn and what it can then forward.
struct ClusterMember {
  int id = -1;
  int parent = -1;  // recruiting vehicle id, -1 for the head
  LinkBudget budget;  // to the resource, from the start of its turn
  std::int64_t frags = 0;
  int order = -1;  // position in the download sequence, -1 if never served
  double start = 0.0, finish = 0.0;  // download interval, s from request time
  double forward_time = 0.0;  // store-and-forward time to the head
  std::vector<int> path;  // relay ids after this member, ending at the head
};

// Coverage counts the head's own download plus every helper's.
struct Cluster {
  int head = -1;
  int resource = -1;
  ClusterMember head_share;
  std::vector<ClusterMember> members;  // recruitment order

  int n_c() const { return static_cast<int>(members.size()); }
  std::int64_t covered_frags() const;
};

struct TransferPlan {
  struct Slice {
    int vehicle = -1;
    std::int64_t first = 1;  // fragment ids, 1-based inclusive
    std::int64_t last = 0;
    std::int64_t count() const { return last - first + 1; }
  };
  std::vector<Slice> slices;
};

struct InsufficientCapacityError : std::runtime_error {
  explicit InsufficientCapacityError(Cluster c)
      : std::runtime_error("cluster: fleet exhausted before covering the file"), partial(std::move(c)) {}
  Cluster partial;
};

// Nearest-first download sequence of one resource over a fixed participant set.
struct Participant {
  VehicleState state;
  int parent = -1;  // index into the participant list; -1 for the head (index 0)
};
struct DownloadSlot {
  bool served = false;
  int order = -1;
  double start = 0.0, finish = 0.0, forward_time = 0.0;
  std::int64_t frags = 0;
  LinkBudget budget;
};
struct DownloadSchedule {
  std::vector<DownloadSlot> slots;  // parallel to participants
  std::int64_t total = 0;
};
DownloadSchedule plan_downloads(const VehicleState& resource, const std::vector<Participant>& parts,
                                std::int64_t needed, const FileSpec& file, const Models& models);

LinkBudget link_budget(const VehicleState& i, const VehicleState& source, const FileSpec& file,
                       const Models& models);
int select_resource(const VehicleState& request, const std::vector<VehicleState>& responders,
                    const FileSpec& file, const Models& models);
bool direct_feasible(const VehicleState& request, const VehicleState& resource, const FileSpec& file,
                     const Models& models);
Cluster build_cluster(const VehicleState& head, const VehicleState& resource, const Fleet& fleet,
                      const FileSpec& file, const Models& models, RandomSource* rng = nullptr);
TransferPlan assign_fragments(const Cluster& cluster, const FileSpec& file);
bool forwarding_feasible(const VehicleState& member, const VehicleState& head,
                         std::int64_t assigned_bytes, const Models& models,
                         double time_left = std::numeric_limits<double>::infinity());

enum class Mode { direct, clustered, failed };
const char* to_string(Mode m);

struct Timeline {
  double download = 0.0;
  double forwarding = 0.0;
  double total = 0.0;
};

struct TransferOutcome {
  Mode mode = Mode::failed;
  std::int64_t bytes_delivered = 0;
  std::optional<Cluster> cluster;
  std::optional<TransferPlan> plan;
  Timeline timeline;
  int resource = -1;
  std::int64_t direct_capacity = 0;
};

TransferOutcome run_cft(const VehicleState& request, const Fleet& fleet, const std::vector<int>& holders,
                        const FileSpec& file, const Models& models, RandomSource* rng = nullptr);
TransferOutcome run_direct_baseline(const VehicleState& request, const Fleet& fleet,
                                    const std::vector<int>& holders, const FileSpec& file,
                                    const Models& models);

}  // namespace cft
