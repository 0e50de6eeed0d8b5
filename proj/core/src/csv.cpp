#include "cft/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "cft/units.hpp"

namespace cft {

std::string fmt_num(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  std::string out(buf);
  // no signed zeros such as "-0.00"
  if (out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

namespace {

bool has_file_axis(MetricKind k) { return k == MetricKind::cluster_size; }
bool in_bytes(MetricKind k) {
  return k == MetricKind::capability || k == MetricKind::max_volume_cft || k == MetricKind::max_volume_direct;
}

}  // namespace

void write_grid_csv(std::ostream& os, const SweepResult& r) {
  os << "rho_per_km,range_m";
  if (has_file_axis(r.kind)) os << ",file_mbit";
  os << ',' << r.value_name;
  if (in_bytes(r.kind)) os << ",value_mbit";
  os << ",samples\n";
  for (const auto& row : r.rows) {
    os << fmt_num(row.rho * 1000.0, 3) << ',' << fmt_num(row.range, 1);
    if (has_file_axis(r.kind)) os << ',' << fmt_num(units::bytes_to_megabits(row.v_file), 3);
    os << ',' << fmt_num(row.value);
    if (in_bytes(r.kind)) os << ',' << fmt_num(units::bytes_to_megabits(row.value), 3);
    os << ',' << row.samples << '\n';
  }
}

void write_records_csv(std::ostream& os, const SweepResult& r) {
  os << "rho_per_km,range_m,file_bytes,seed,request,sum,count,mode,n_c,bytes,download_s,forwarding_s,validated\n";
  for (const auto& rec : r.records) {
    os << fmt_num(rec.rho * 1000.0, 3) << ',' << fmt_num(rec.range, 1) << ',' << rec.v_file << ',' << rec.seed
       << ',' << rec.request << ',' << fmt_num(rec.sum) << ',' << rec.count << ',' << to_string(rec.mode) << ','
       << rec.n_c << ',' << rec.bytes << ',' << fmt_num(rec.download_s, 3) << ',' << fmt_num(rec.forwarding_s, 3)
       << ',' << (rec.validated ? 1 : 0) << '\n';
  }
}

}  // namespace cft
