#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cft/simulator.hpp"

namespace cft {

// Physical dimension of a config value; selects the accepted unit suffixes.
enum class Dim { none, length, speed, accel, time, power, snr, rate, size, density };

// Sectioned key/value text:
//
//   [mobility]
//   v_min = 60 km/h       # comment
//   [experiment]
//   ranges = 250, 300, 350 m
//
// Keys are addressed as "section.key". Values keep their unit suffix until a
// typed getter converts them to SI.
class ConfigDoc {
 public:
  static ConfigDoc parse(std::istream& in, const std::string& origin = "<input>");
  static ConfigDoc parse_string(const std::string& text);
  static ConfigDoc load(const std::string& path);

  // "section.key=value"
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& raw(const std::string& key) const;
  std::vector<std::string> keys() const;

  double number(const std::string& key, Dim dim) const;
  std::vector<double> numbers(const std::string& key, Dim dim) const;
  std::string text(const std::string& key) const { return raw(key); }

 private:
  std::map<std::string, std::string> values_;
};

// Converts "<number list> [unit]" to SI. Throws ConfigError.
std::vector<double> parse_quantities(const std::string& value, Dim dim);

// Built-in defaults overlaid with whatever keys the document sets. Unknown keys
// are rejected so typos do not pass silently.
ExperimentConfig load_experiment(const ConfigDoc& doc);

// Resolved parameters in SI, one "section.key = value" per line.
void describe(std::ostream& os, const ExperimentConfig& config);

}  // namespace cft
