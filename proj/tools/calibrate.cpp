// Fits the rate-ladder SNR thresholds to the reference throughput and
// transmission-capability anchors at rho = 5/km, R = 250 m and 600 m.
//
//   cft_calibrate [config] [--seeds N] [--scan]
//
// Pair samples (oncoming in-range pairs, nearest same-direction neighbours) are
// drawn once; the fit then only re-evaluates E(c) and the MAC model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cft/config.hpp"
#include "cft/connection.hpp"
#include "cft/mac.hpp"
#include "cft/units.hpp"

using namespace cft;

namespace {

struct Sample {
  double d;
  double dt;
};

struct Anchors {
  double thr_near = 6.6e6, thr_far = 8.0e6;  // bit/s at R = 250, 600
  double cap_near = 35.0, cap_far = 102.9;   // Mbit at R = 250, 600
};

struct Data {
  std::vector<Sample> pairs_near, pairs_far;
  std::vector<double> nn_near, nn_far;
};

Data collect(const ExperimentConfig& c, double rho, double r_near, double r_far) {
  Data data;
  const double L = c.mobility.lane_length;
  for (int seed = 0; seed < c.seeds; ++seed)
    for (const auto& fleet : scenario_snapshots(c, rho, seed)) {
      for (std::size_t i = 0; i < fleet.size(); ++i) {
        double nn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < fleet.size(); ++j) {
          if (i == j) continue;
          if (fleet[i].direction == fleet[j].direction) {
            nn = std::min(nn, ring_distance(fleet[i], fleet[j], L));
            continue;
          }
          if (j < i) continue;
          const auto k = KinematicPair::between(fleet[i], fleet[j], L);
          const double d = k.distance();
          if (d <= r_near) data.pairs_near.push_back({d, predict_connection_time(k, r_near).capped(c.run_duration)});
          if (d <= r_far) data.pairs_far.push_back({d, predict_connection_time(k, r_far).capped(c.run_duration)});
        }
        data.nn_near.push_back(nn);
        data.nn_far.push_back(nn);
      }
    }
  return data;
}

struct Eval {
  double thr_near, thr_far, cap_near, cap_far;
};

Eval evaluate(const ExperimentConfig& c, const std::vector<double>& thr_db, const Data& data, double rho,
              double r_near, double r_far) {
  RateTable table = c.rates;
  table.thresholds.clear();
  for (double db : thr_db) table.thresholds.push_back(units::db_to_linear(db));
  auto mac_near = c.mac, mac_far = c.mac;
  mac_near.rcs = c.rcs_factor * r_near;
  mac_far.rcs = c.rcs_factor * r_far;
  const ThroughputModel tm_near(rho, mac_near), tm_far(rho, mac_far);
  auto cap = [&](const std::vector<Sample>& s) {
    double sum = 0.0;
    for (const auto& p : s) {
      const double e = expected_rate(std::max(p.d, 1e-3), c.channel, table);
      sum += std::floor(e * p.dt / (8.0 * c.fragment_size)) * c.fragment_size;
    }
    return units::bytes_to_megabits(sum / s.size());
  };
  auto thr = [&](const std::vector<double>& nn, const ThroughputModel& tm, double range) {
    double sum = 0.0;
    for (double d : nn)
      if (d <= range) sum += tm(expected_rate(d, c.channel, table));
    return sum / nn.size();
  };
  return {thr(data.nn_near, tm_near, r_near), thr(data.nn_far, tm_far, r_far), cap(data.pairs_near), cap(data.pairs_far)};
}

// thresholds from unconstrained parameters: first value free, then positive steps
std::vector<double> decode(const std::vector<double>& x) {
  std::vector<double> db{x[0]};
  for (std::size_t i = 1; i < x.size(); ++i) db.push_back(db.back() + 0.1 + std::exp(x[i]));
  return db;
}

// Relative error scaled by the allowed band, with a steep wall near its edge.
double loss(const Eval& e, const Anchors& a) {
  auto term = [](double v, double t, double tol) {
    const double z = (v / t - 1.0) / tol;
    const double over = std::max(0.0, std::abs(z) - 0.8);
    return z * z + 100.0 * over * over;
  };
  return term(e.thr_near, a.thr_near, 0.15) + term(e.thr_far, a.thr_far, 0.15) +
         term(e.cap_near, a.cap_near, 0.25) + term(e.cap_far, a.cap_far, 0.25);
}

// Plain Nelder-Mead; a few hundred evaluations are plenty here.
template <class F>
std::vector<double> nelder_mead(F f, std::vector<double> x0, double step, int iters) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> s{x0};
  for (std::size_t i = 0; i < n; ++i) {
    auto x = x0;
    x[i] += step;
    s.push_back(x);
  }
  std::vector<double> fv;
  for (auto& x : s) fv.push_back(f(x));
  for (int it = 0; it < iters; ++it) {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const auto best = idx[0], worst = idx[n], second = idx[n - 1];
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) c[k] += s[idx[i]][k] / n;
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = c[k] + t * (s[worst][k] - c[k]);
      return x;
    };
    auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[best]) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) s[worst] = xe, fv[worst] = fe;
      else s[worst] = xr, fv[worst] = fr;
    } else if (fr < fv[second]) {
      s[worst] = xr, fv[worst] = fr;
    } else {
      auto xc = along(0.5);
      const double fc = f(xc);
      if (fc < fv[worst]) {
        s[worst] = xc, fv[worst] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          auto& x = s[idx[i]];
          for (std::size_t k = 0; k < n; ++k) x[k] = s[best][k] + 0.5 * (x[k] - s[best][k]);
          fv[idx[i]] = f(x);
        }
      }
    }
  }
  return s[std::min_element(fv.begin(), fv.end()) - fv.begin()];
}

}  // namespace

int main(int argc, char** argv) {
  try {
    CLI::App app{"Fit rate-ladder SNR thresholds to the throughput and capability anchors"};
    std::string path;
    int seeds = 10;
    bool scan = false;
    app.add_option("config", path, "Config file (default: built-in)");
    app.add_option("--seeds", seeds, "Seeds for the pair samples")->check(CLI::PositiveNumber);
    app.add_flag("--scan", scan, "Print a coarse feasibility grid instead of fitting");
    CLI11_PARSE(app, argc, argv);
    ConfigDoc doc = path.empty() ? ConfigDoc{} : ConfigDoc::load(path);
    doc.set("experiment.seeds", std::to_string(seeds));
    const auto cfg = load_experiment(doc);
    const double rho = 5e-3, r_near = 250.0, r_far = 600.0;
    const Anchors anchors;
    const auto data = collect(cfg, rho, r_near, r_far);
    std::printf("samples: %zu / %zu pairs, %zu / %zu neighbours\n", data.pairs_near.size(), data.pairs_far.size(),
                data.nn_near.size(), data.nn_far.size());

    auto objective = [&](const std::vector<double>& x) {
      return loss(evaluate(cfg, decode(x), data, rho, r_near, r_far), anchors);
    };
    if (scan) {
      // coarse feasibility map over the two upper thresholds
      for (double c = -20.0; c <= 40.0; c += 3.0)
        for (double b = c + 0.5; b <= 60.0; b += 3.0) {
          const auto e = evaluate(cfg, {c - 1.0, c - 0.5, c, b}, data, rho, r_near, r_far);
          std::printf("scan %.1f %.1f  thr %.3f %.3f  cap %.2f %.2f\n", c, b, e.thr_near / 1e6, e.thr_far / 1e6,
                      e.cap_near, e.cap_far);
        }
      return 0;
    }
    std::vector<double> best;
    double best_f = std::numeric_limits<double>::infinity();
    for (double start : {-10.0, 0.0, 10.0, 20.0, 30.0}) {
      const auto x = nelder_mead(objective, {start, 1.0, 1.0, 1.0}, 3.0, 400);
      const double f = objective(x);
      if (f < best_f) best_f = f, best = x;
    }
    const auto db = decode(best);
    const auto e = evaluate(cfg, db, data, rho, r_near, r_far);
    std::printf("thresholds_db = %.3f, %.3f, %.3f, %.3f\n", db[0], db[1], db[2], db[3]);
    std::printf("throughput  R=250: %.3f Mbps  R=600: %.3f Mbps\n", e.thr_near / 1e6, e.thr_far / 1e6);
    std::printf("capability  R=250: %.2f Mbit  R=600: %.2f Mbit\n", e.cap_near, e.cap_far);
    std::printf("loss %.5f\n", best_f);
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "calibrate: " << ex.what() << "\n";
    return 2;
  }
}
