#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cft/channel.hpp"
#include "cft/config.hpp"
#include "cft/csv.hpp"
#include "cft/errors.hpp"
#include "cft/simulator.hpp"
#include "cft/units.hpp"

namespace cft::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> seeds;
  std::vector<std::string> overrides;
  std::vector<double> safety_distances;  // m; one sweep per entry
  // max-volume
  std::string scheme = "both";
  // rate-curve
  double from = 1.0, to = 600.0, step = 1.0;
};

ExperimentConfig resolve_config(const Options& o) {
  std::string path = o.config_path;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  ConfigDoc doc = path.empty() ? ConfigDoc{} : ConfigDoc::load(path);
  for (const auto& kv : o.overrides) doc.apply_override(kv);
  if (o.seeds) doc.set("experiment.seeds", std::to_string(*o.seeds));
  return load_experiment(doc);
}

void write_file(const Options& o, const std::string& name, const SweepResult& r, std::ostream& out) {
  fs::create_directories(o.out_dir);
  const auto grid = fs::path(o.out_dir) / (name + ".csv");
  const auto runs = fs::path(o.out_dir) / (name + "_runs.csv");
  std::ofstream g(grid), rr(runs);
  if (!g || !rr) throw std::runtime_error("cannot write into '" + o.out_dir + "'");
  write_grid_csv(g, r);
  write_records_csv(rr, r);
  out << "wrote " << grid.string() << "\n";
}

void summarize(const SweepResult& r, std::ostream& out, const std::string& prefix = "") {
  const bool bytes = r.kind == MetricKind::capability || r.kind == MetricKind::max_volume_cft ||
                     r.kind == MetricKind::max_volume_direct;
  for (const auto& row : r.rows) {
    out << prefix << to_string(r.kind) << " rho=" << fmt_num(row.rho * 1000.0, 1) << "/km R=" << fmt_num(row.range, 0)
        << "m";
    if (r.kind == MetricKind::cluster_size)
      out << " V=" << fmt_num(units::bytes_to_megabits(row.v_file), 1) << "Mbit";
    if (bytes) out << " value=" << fmt_num(units::bytes_to_megabits(row.value), 2) << "Mbit";
    else if (r.kind == MetricKind::throughput) out << " value=" << fmt_num(row.value / 1e6, 3) << "Mbps";
    else out << " value=" << fmt_num(row.value, 3);
    out << " n=" << row.samples << "\n";
  }
}

int sweep(const Options& o, MetricKind kind, const std::string& name, std::ostream& out) {
  const auto cfg = resolve_config(o);
  if (o.safety_distances.empty()) {
    const auto r = run_sweep(cfg, kind);
    write_file(o, name, r, out);
    summarize(r, out);
    return kExitOk;
  }
  for (double sd : o.safety_distances) {
    auto c = cfg;
    c.mobility.safety_distance = sd;
    c.validate();
    const auto r = run_sweep(c, kind);
    write_file(o, name + "_sd" + fmt_num(sd, 0), r, out);
    summarize(r, out, "sd=" + fmt_num(sd, 0) + "m ");
  }
  return kExitOk;
}

int max_volume(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  std::optional<SweepResult> cft, direct;
  if (o.scheme == "cft" || o.scheme == "both") cft = max_transfer_volume(cfg, true);
  if (o.scheme == "direct" || o.scheme == "both") direct = max_transfer_volume(cfg, false);
  if (cft) {
    write_file(o, "max_volume_cft", *cft, out);
    summarize(*cft, out);
  }
  if (direct) {
    write_file(o, "max_volume_direct", *direct, out);
    summarize(*direct, out);
  }
  if (cft && direct)
    for (std::size_t i = 0; i < cft->rows.size() && i < direct->rows.size(); ++i) {
      const double d = direct->rows[i].value;
      out << "ratio rho=" << fmt_num(cft->rows[i].rho * 1000.0, 1)
          << "/km cft/direct=" << (d > 0 ? fmt_num(cft->rows[i].value / d, 2) : std::string("inf")) << "\n";
    }
  return kExitOk;
}

int rate_curve(const Options& o, std::ostream& out) {
  const auto cfg = resolve_config(o);
  if (!(o.from > 0.0) || !(o.to >= o.from) || !(o.step > 0.0))
    throw ConfigError("rate-curve: need 0 < from <= to and step > 0");
  fs::create_directories(o.out_dir);
  const auto path = fs::path(o.out_dir) / "rate_curve.csv";
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << "distance_m,mu,omega_w,p_zero";
  for (std::size_t k = 0; k < cfg.rates.rates.size(); ++k) f << ",p_" << fmt_num(cfg.rates.rates[k] / 1e6, 1) << "mbps";
  f << ",expected_rate_bps\n";
  const auto n = static_cast<long>(std::floor((o.to - o.from) / o.step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double d = o.from + i * o.step;
    const auto dist = rate_distribution(d, cfg.channel, cfg.rates);
    char omega[32];
    std::snprintf(omega, sizeof omega, "%.6e", mean_power(d, cfg.channel));
    f << fmt_num(d, 3) << ',' << fmt_num(mu_for_distance(d, cfg.channel.mu_profile), 3) << ',' << omega << ','
      << fmt_num(dist.p_zero, 9);
    for (double p : dist.p) f << ',' << fmt_num(p, 9);
    f << ',' << fmt_num(dist.expected_rate, 1) << '\n';
  }
  out << "wrote " << path.string() << " (" << n + 1 << " distances)\n";
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Highway VANET cluster-based file transfer simulator", "cftsim"};
  app.option_defaults()->always_capture_default();
  app.add_option("--config", o.config_path, std::string("Config file (default: $") + kConfigEnv + ", else built-in)");
  app.add_option("--out", o.out_dir, "Output directory for CSV files");
  app.add_option("--seeds", o.seeds, "Number of seeds per grid point")->check(CLI::PositiveNumber);
  app.add_option("--set", o.overrides, "Override a config key, section.key=value (repeatable)");
  app.add_option("--sd", o.safety_distances, "Safety distances in m; repeats a grid sweep once per value")
      ->check(CLI::PositiveNumber);
  app.require_subcommand(1);

  int status = kExitOk;
  auto on = [&](CLI::App* sub, auto fn) { sub->callback([&, fn] { status = fn(); }); };
  on(app.add_subcommand("connection-time", "Average connection time of oncoming pairs vs (rho, R)"),
     [&] { return sweep(o, MetricKind::connection_time, "connection_time", out); });
  on(app.add_subcommand("throughput", "Average forwarding-hop MAC throughput vs (rho, R)"),
     [&] { return sweep(o, MetricKind::throughput, "throughput", out); });
  on(app.add_subcommand("capacity", "Average transmission capability vs (rho, R)"),
     [&] { return sweep(o, MetricKind::capability, "capability", out); });
  auto* mv = app.add_subcommand("max-volume", "Maximum file transfer volume, CFT and direct");
  mv->add_option("--scheme", o.scheme, "cft, direct or both")->check(CLI::IsMember({"cft", "direct", "both"}));
  on(mv, [&] { return max_volume(o, out); });
  on(app.add_subcommand("cluster-size", "Average cluster size vs (rho, file size)"),
     [&] { return sweep(o, MetricKind::cluster_size, "cluster_size", out); });
  auto* rc = app.add_subcommand("rate-curve", "Rate distribution and E(c) vs distance");
  rc->add_option("--from", o.from, "First distance, m");
  rc->add_option("--to", o.to, "Last distance, m");
  rc->add_option("--step", o.step, "Distance step, m");
  on(rc, [&] { return rate_curve(o, out); });
  on(app.add_subcommand("validate-config", "Load the config and echo resolved SI values"), [&] {
    describe(out, resolve_config(o));
    return kExitOk;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return status;
}

}  // namespace cft::cli
