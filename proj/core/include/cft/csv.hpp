#pragma once

#include <iosfwd>
#include <string>

#include "cft/simulator.hpp"

namespace cft {

// Grid table: rho and range (and file size where it applies) first, then the
// metric. Byte metrics get an extra megabit column.
void write_grid_csv(std::ostream& os, const SweepResult& result);

// One line per run record.
void write_records_csv(std::ostream& os, const SweepResult& result);

// Fixed-precision formatting shared by every CSV writer, so output is stable.
std::string fmt_num(double x, int precision = 6);

}  // namespace cft
