#include "cft/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "cft/errors.hpp"
#include "cft/units.hpp"

namespace cft {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Unit {
  const char* name;
  double scale;
};

// plain multiplicative units per dimension; dBm and dB are handled separately
const std::map<Dim, std::vector<Unit>>& unit_table() {
  static const std::map<Dim, std::vector<Unit>> t{
      {Dim::none, {}},
      {Dim::length, {{"m", 1.0}, {"km", 1000.0}}},
      {Dim::speed, {{"m/s", 1.0}, {"km/h", 1.0 / 3.6}, {"kmh", 1.0 / 3.6}}},
      {Dim::accel, {{"m/s2", 1.0}, {"m/s^2", 1.0}}},
      {Dim::time, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"\xC2\xB5s", 1e-6}}},
      {Dim::power, {{"W", 1.0}, {"mW", 1e-3}}},
      {Dim::snr, {{"linear", 1.0}}},
      {Dim::rate, {{"bps", 1.0}, {"kbps", 1e3}, {"Mbps", 1e6}}},
      // sizes in bytes; lower-case b is bits
      {Dim::size, {{"B", 1.0}, {"KB", 1e3}, {"MB", 1e6}, {"b", 0.125}, {"Kb", 125.0}, {"Mb", 125000.0}}},
      {Dim::density, {{"/m", 1.0}, {"car/km", 1e-3}, {"veh/km", 1e-3}, {"/km", 1e-3}}},
  };
  return t;
}

}  // namespace

std::vector<double> parse_quantities(const std::string& value, Dim dim) {
  // split off the unit: the trailing token that does not parse as a number
  std::string body = trim(value);
  std::string unit;
  const auto sp = body.find_last_of(" \t");
  if (sp != std::string::npos) {
    const std::string tail = body.substr(sp + 1);
    char* end = nullptr;
    std::strtod(tail.c_str(), &end);
    if (end == tail.c_str() || *end != '\0') {
      unit = tail;
      body = trim(body.substr(0, sp));
    }
  }
  std::vector<double> nums;
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config: empty list element in '" + value + "'");
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') throw ConfigError("config: not a number: '" + item + "'");
    nums.push_back(x);
  }
  if (nums.empty()) throw ConfigError("config: no value in '" + value + "'");
  if (unit.empty()) return nums;

  if (dim == Dim::power && unit == "dBm") {
    for (auto& x : nums) x = units::dbm_to_watt(x);
    return nums;
  }
  if (dim == Dim::snr && unit == "dB") {
    for (auto& x : nums) x = units::db_to_linear(x);
    return nums;
  }
  for (const auto& u : unit_table().at(dim))
    if (unit == u.name) {
      for (auto& x : nums) x *= u.scale;
      return nums;
    }
  throw ConfigError("config: unit '" + unit + "' not accepted in '" + value + "'");
}

ConfigDoc ConfigDoc::parse(std::istream& in, const std::string& origin) {
  ConfigDoc doc;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    doc.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return doc;
}

ConfigDoc ConfigDoc::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

ConfigDoc ConfigDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  return parse(in, path);
}

void ConfigDoc::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
    throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigDoc::set(const std::string& key, const std::string& value) { values_[key] = value; }

const std::string& ConfigDoc::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::vector<std::string> ConfigDoc::keys() const {
  std::vector<std::string> k;
  for (const auto& [key, _] : values_) k.push_back(key);
  return k;
}

double ConfigDoc::number(const std::string& key, Dim dim) const {
  const auto v = numbers(key, dim);
  if (v.size() != 1) throw ConfigError("config: '" + key + "' expects a single value");
  return v.front();
}

std::vector<double> ConfigDoc::numbers(const std::string& key, Dim dim) const {
  try {
    return parse_quantities(raw(key), dim);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (key '" + key + "')");
  }
}

// ---------------------------------------------------------------------------

namespace {

int as_int(double x, const std::string& key) {
  if (std::floor(x) != x) throw ConfigError("config: '" + key + "' must be an integer");
  return static_cast<int>(x);
}

}  // namespace

ExperimentConfig load_experiment(const ConfigDoc& doc) {
  ExperimentConfig c = default_experiment();
  std::set<std::string> used;
  auto num = [&](const std::string& key, Dim dim, auto& field) {
    if (!doc.has(key)) return;
    used.insert(key);
    const double v = doc.number(key, dim);
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_integral_v<T>) {
      if constexpr (sizeof(T) > sizeof(int)) {
        field = static_cast<T>(std::llround(v));
      } else {
        field = static_cast<T>(as_int(v, key));
      }
    } else {
      field = v;
    }
  };
  auto list = [&](const std::string& key, Dim dim) -> std::optional<std::vector<double>> {
    if (!doc.has(key)) return std::nullopt;
    used.insert(key);
    return doc.numbers(key, dim);
  };

  auto& m = c.mobility;
  num("mobility.v_min", Dim::speed, m.v_min);
  num("mobility.v_max", Dim::speed, m.v_max);
  num("mobility.safety_distance", Dim::length, m.safety_distance);
  num("mobility.dt", Dim::time, m.dt);
  num("mobility.accel", Dim::accel, m.accel_mag);
  num("mobility.lane_length", Dim::length, m.lane_length);
  num("mobility.lane_width", Dim::length, m.lane_width);
  num("mobility.lanes_per_direction", Dim::none, m.lanes_per_direction);

  auto& ch = c.channel;
  num("channel.pt", Dim::power, ch.pt);
  num("channel.gt", Dim::none, ch.gt);
  num("channel.gr", Dim::none, ch.gr);
  num("channel.ht", Dim::length, ch.ht);
  num("channel.hr", Dim::length, ch.hr);
  num("channel.loss", Dim::none, ch.loss);
  num("channel.alpha", Dim::none, ch.alpha);
  num("channel.noise", Dim::power, ch.nr);
  {
    auto br = list("channel.mu_breaks", Dim::length);
    auto mu = list("channel.mu_values", Dim::none);
    if (br || mu) {
      if (!br || !mu || br->size() != mu->size())
        throw ConfigError("config: channel.mu_breaks and channel.mu_values must both be given, same length");
      ch.mu_profile.segments.clear();
      for (std::size_t i = 0; i < br->size(); ++i) ch.mu_profile.segments.push_back({(*br)[i], (*mu)[i]});
    }
  }
  if (auto r = list("rates.rates", Dim::rate)) c.rates.rates = *r;
  if (auto t = list("rates.thresholds", Dim::snr)) c.rates.thresholds = *t;

  auto& mac = c.mac;
  num("mac.window", Dim::none, mac.w);
  {
    double lp_bytes = mac.lp / 8.0;
    num("mac.packet_length", Dim::size, lp_bytes);
    mac.lp = lp_bytes * 8.0;
  }
  num("mac.slot", Dim::time, mac.t_slot);
  num("mac.rts", Dim::time, mac.t_rts);
  num("mac.cts", Dim::time, mac.t_cts);
  num("mac.difs", Dim::time, mac.t_difs);
  num("mac.sifs", Dim::time, mac.t_sifs);
  num("mac.ack", Dim::time, mac.t_ack);
  num("mac.rcs_factor", Dim::none, c.rcs_factor);

  {
    double frag = static_cast<double>(c.fragment_size);
    num("protocol.fragment_size", Dim::size, frag);
    c.fragment_size = std::llround(frag);
  }
  num("protocol.willingness", Dim::none, c.willingness);

  if (auto d = list("experiment.densities", Dim::density)) c.densities = *d;
  if (auto r = list("experiment.ranges", Dim::length)) c.ranges = *r;
  if (auto f = list("experiment.file_sizes", Dim::size)) {
    c.file_sizes.clear();
    for (double v : *f) c.file_sizes.push_back(std::llround(v));
  }
  num("experiment.seeds", Dim::none, c.seeds);
  num("experiment.base_seed", Dim::none, c.base_seed);
  num("experiment.run_duration", Dim::time, c.run_duration);
  num("experiment.warmup_steps", Dim::none, c.warmup_steps);
  num("experiment.snapshots", Dim::none, c.snapshots);
  num("experiment.snapshot_interval", Dim::none, c.snapshot_interval);
  num("experiment.requests_per_seed", Dim::none, c.requests_per_seed);
  num("experiment.success_threshold", Dim::none, c.success_threshold);
  num("experiment.volume_range", Dim::length, c.volume_range);
  {
    double vmax = static_cast<double>(c.volume_max);
    num("experiment.volume_max", Dim::size, vmax);
    c.volume_max = std::llround(vmax);
  }
  num("experiment.threads", Dim::none, c.threads);
  if (doc.has("experiment.success_basis")) {
    used.insert("experiment.success_basis");
    const auto b = doc.text("experiment.success_basis");
    if (b == "planned") c.success_basis = SuccessBasis::planned;
    else if (b == "validated") c.success_basis = SuccessBasis::validated;
    else throw ConfigError("config: success_basis must be 'planned' or 'validated'");
  }

  for (const auto& k : doc.keys())
    if (!used.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  c.validate();
  return c;
}

namespace {

template <class T>
std::string join(const std::vector<T>& v, double scale = 1.0) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << static_cast<double>(v[i]) * scale;
  return os.str();
}

}  // namespace

void describe(std::ostream& os, const ExperimentConfig& c) {
  os << std::setprecision(10);
  const auto& m = c.mobility;
  os << "mobility.v_min = " << m.v_min << " m/s\n"
     << "mobility.v_max = " << m.v_max << " m/s\n"
     << "mobility.safety_distance = " << m.safety_distance << " m\n"
     << "mobility.dt = " << m.dt << " s\n"
     << "mobility.accel = " << m.accel_mag << " m/s2\n"
     << "mobility.lane_length = " << m.lane_length << " m\n"
     << "mobility.lane_width = " << m.lane_width << " m\n"
     << "mobility.lanes_per_direction = " << m.lanes_per_direction << "\n";
  const auto& ch = c.channel;
  os << "channel.pt = " << ch.pt << " W\n"
     << "channel.gt = " << ch.gt << "\n"
     << "channel.gr = " << ch.gr << "\n"
     << "channel.ht = " << ch.ht << " m\n"
     << "channel.hr = " << ch.hr << " m\n"
     << "channel.loss = " << ch.loss << "\n"
     << "channel.alpha = " << ch.alpha << "\n"
     << "channel.noise = " << ch.nr << " W\n";
  std::vector<double> br, mu;
  for (const auto& s : ch.mu_profile.segments) {
    br.push_back(s.from);
    mu.push_back(s.mu);
  }
  os << "channel.mu_breaks = " << join(br) << " m\n"
     << "channel.mu_values = " << join(mu) << "\n"
     << "rates.rates = " << join(c.rates.rates) << " bps\n"
     << "rates.thresholds = " << join(c.rates.thresholds) << " linear\n";
  const auto& mac = c.mac;
  os << "mac.window = " << mac.w << "\n"
     << "mac.packet_length = " << mac.lp / 8.0 << " B\n"
     << "mac.slot = " << mac.t_slot << " s\n"
     << "mac.rts = " << mac.t_rts << " s\n"
     << "mac.cts = " << mac.t_cts << " s\n"
     << "mac.difs = " << mac.t_difs << " s\n"
     << "mac.sifs = " << mac.t_sifs << " s\n"
     << "mac.ack = " << mac.t_ack << " s\n"
     << "mac.rcs_factor = " << c.rcs_factor << "\n"
     << "protocol.fragment_size = " << c.fragment_size << " B\n"
     << "protocol.willingness = " << c.willingness << "\n"
     << "experiment.densities = " << join(c.densities) << " /m\n"
     << "experiment.ranges = " << join(c.ranges) << " m\n"
     << "experiment.file_sizes = " << join(c.file_sizes) << " B\n"
     << "experiment.seeds = " << c.seeds << "\n"
     << "experiment.base_seed = " << c.base_seed << "\n"
     << "experiment.run_duration = " << c.run_duration << " s\n"
     << "experiment.warmup_steps = " << c.warmup_steps << "\n"
     << "experiment.snapshots = " << c.snapshots << "\n"
     << "experiment.snapshot_interval = " << c.snapshot_interval << "\n"
     << "experiment.requests_per_seed = " << c.requests_per_seed << "\n"
     << "experiment.success_threshold = " << c.success_threshold << "\n"
     << "experiment.success_basis = " << (c.success_basis == SuccessBasis::planned ? "planned" : "validated")
     << "\n"
     << "experiment.volume_range = " << c.volume_range << " m\n"
     << "experiment.volume_max = " << c.volume_max << " B\n"
     << "experiment.threads = " << c.threads << "\n";
}

}  // namespace cft
