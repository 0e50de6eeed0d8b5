#pragma once

#include <cmath>

// Unit helpers. Everything inside the library is SI: m, s, W, bit/s, bytes.
namespace cft::units {

inline constexpr double kmh(double v) { return v / 3.6; }
inline constexpr double to_kmh(double v) { return v * 3.6; }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// File volumes are reported in megabits.
inline constexpr double kBitsPerMegabit = 1e6;
inline constexpr double kBytesPerMegabit = 125000.0;

inline constexpr double bytes_to_megabits(double b) { return b * 8.0 / kBitsPerMegabit; }

}  // namespace cft::units
