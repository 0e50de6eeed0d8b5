#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cft/channel.hpp"
#include "cft/mac.hpp"
#include "cft/mobility.hpp"
#include "cft/protocol.hpp"

namespace cft {

enum class SuccessBasis { planned, validated };

struct ExperimentConfig {
  MobilityConfig mobility;
  ChannelParams channel;
  RateTable rates;
  MacParams mac;
  double rcs_factor = 1.0;  // carrier-sense range as a multiple of R

  std::int64_t fragment_size = 125000;
  double willingness = 1.0;

  std::vector<double> densities;  // vehicles per metre, per direction
  std::vector<double> ranges;     // m
  std::vector<std::int64_t> file_sizes;  // bytes

  int seeds = 30;
  std::uint64_t base_seed = 20130101;
  double run_duration = 60.0;  // s, horizon of every protocol run
  int warmup_steps = 300;
  int snapshots = 5;
  int snapshot_interval = 20;  // steps
  int requests_per_seed = 4;
  double success_threshold = 0.5;
  SuccessBasis success_basis = SuccessBasis::validated;
  double volume_range = 250.0;        // R for the volume and cluster-size sweeps
  std::int64_t volume_max = 1000LL * 125000;  // upper end of the volume search, bytes
  int threads = 0;                    // 0: hardware concurrency

  void validate() const;  // throws ConfigError
  MobilityConfig mobility_at(double rho) const;
  Models models_at(double rho, double range) const;
};

ExperimentConfig default_experiment();

enum class MetricKind { connection_time, throughput, capability, max_volume_cft, max_volume_direct, cluster_size };
const char* to_string(MetricKind k);

struct GridRow {
  double rho = 0.0;
  double range = 0.0;
  std::int64_t v_file = 0;
  double value = 0.0;
  std::size_t samples = 0;
};

// One seed (and, for protocol sweeps, one request instant) at one grid point.
// For pair sweeps `sum`/`count` accumulate the sampled quantity; for protocol
// sweeps `sum` is the run's value and count is 1.
struct RunRecord {
  double rho = 0.0;
  double range = 0.0;
  std::int64_t v_file = 0;
  int seed = 0;
  int request = -1;
  double sum = 0.0;
  std::size_t count = 0;
  Mode mode = Mode::failed;
  int n_c = 0;
  std::int64_t bytes = 0;
  double download_s = 0.0;
  double forwarding_s = 0.0;
  bool validated = true;
};

struct SweepResult {
  MetricKind kind = MetricKind::connection_time;
  std::string value_name;  // CSV header of the value column
  std::vector<GridRow> rows;
  std::vector<RunRecord> records;
};

SweepResult run_sweep(const ExperimentConfig& config, MetricKind kind);

SweepResult connection_time_sweep(const ExperimentConfig& config);
SweepResult throughput_sweep(const ExperimentConfig& config);
SweepResult capability_sweep(const ExperimentConfig& config);
SweepResult max_transfer_volume(const ExperimentConfig& config, bool cft);
SweepResult cluster_size_profile(const ExperimentConfig& config);

// Aggregates recomputed from records: pooled mean for pair and cluster
// sweeps, success quantile for volume sweeps.
std::vector<GridRow> aggregate(const SweepResult& result, double success_threshold);

// ---------------------------------------------------------------------------
// Building blocks, exposed for tests and tools.

// Fleet snapshots of one (rho, seed) scenario after warm-up.
std::vector<Fleet> scenario_snapshots(const ExperimentConfig& config, double rho, int seed);

// A protocol run instance: request vehicle, its file holder, and the actual
// mobility that follows (one fleet per time step, starting at the request).
struct RequestScenario {
  bool valid = false;
  int request = -1;
  int holder = -1;
  std::vector<Fleet> trajectory;
};
RequestScenario request_scenario(const ExperimentConfig& config, const Fleet& snapshot, double rho,
                                 double range, int seed, int request_index);

// Checks a planned outcome against the mobility that actually happened.
// Returns bytes that would really reach the head.
struct Validation {
  bool ok = true;
  std::int64_t bytes = 0;
};
Validation validate_outcome(const TransferOutcome& outcome, const RequestScenario& scenario,
                            const FileSpec& file, const Models& models, double dt);

// Runs fn(i) for i in [0, n) on a small pool; results must be written by index.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace cft
