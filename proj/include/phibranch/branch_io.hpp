// Branch serialization: one CSV row per accepted point, floats at 17
// significant digits so reloads reproduce the values bit-exactly. The sign
// of the arclength column separates the two directions sharing the start
// point (see continuation.hpp).
#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "phibranch/continuation.hpp"

namespace phibranch {

inline const char* kBranchCsvHeader =
    "index,lambda,sup_x,sup_xprime,c1_norm,residual,arclength,flags";

namespace branch_io_detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace branch_io_detail

inline void write_branch_csv(const Branch& branch, const std::string& path) {
  if (branch.points.empty())
    fail(errc::invalid_params, "write_branch_csv: branch has no points");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
  out << kBranchCsvHeader << "\n";
  using branch_io_detail::fmt17;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const BranchPoint& p = branch.points[i];
    out << i << ',' << fmt17(p.pair.lambda) << ',' << fmt17(p.point_norms.sup_x) << ','
        << fmt17(p.point_norms.sup_xprime) << ',' << fmt17(p.point_norms.c1) << ','
        << fmt17(p.pair.residual_sup) << ',' << fmt17(p.arclength) << ',';
    for (std::size_t k = 0; k < p.flags.size(); ++k) out << (k ? ";" : "") << p.flags[k];
    out << "\n";
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

struct BranchCsvRow {
  int index = 0;
  double lambda = 0.0;
  double sup_x = 0.0;
  double sup_xprime = 0.0;
  double c1_norm = 0.0;
  double residual = 0.0;
  double arclength = 0.0;
  std::vector<std::string> flags;
};

inline std::vector<BranchCsvRow> read_branch_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kBranchCsvHeader)
    fail(errc::parse_error, "'" + path + "': unexpected CSV header");
  std::vector<BranchCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() != 8) fail(errc::parse_error, "'" + path + "': malformed row");
    BranchCsvRow row;
    row.index = std::stoi(fields[0]);
    row.lambda = std::stod(fields[1]);
    row.sup_x = std::stod(fields[2]);
    row.sup_xprime = std::stod(fields[3]);
    row.c1_norm = std::stod(fields[4]);
    row.residual = std::stod(fields[5]);
    row.arclength = std::stod(fields[6]);
    std::string flag;
    for (char ch : fields[7]) {
      if (ch == ';') {
        if (!flag.empty()) row.flags.push_back(flag);
        flag.clear();
      } else {
        flag += ch;
      }
    }
    if (!flag.empty()) row.flags.push_back(flag);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace phibranch
