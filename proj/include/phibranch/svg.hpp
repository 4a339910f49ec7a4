// Bifurcation diagrams as self-contained SVG 1.1: lambda horizontal,
// C1 norm vertical, one polyline per branch, dashed guides at the
// admissible-interval endpoints, at the lambda_hat thresholds and at the
// norm ceiling. Output is deterministic for identical inputs.
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "phibranch/branch_io.hpp"

namespace phibranch {

struct DiagramSpec {
  double lambda_min = -20.0;
  double lambda_max = 20.0;
  double c1_ceiling = 50.0;
  // Finite endpoints of the admissible interval, when it is bounded.
  std::optional<double> interval_lo, interval_hi;
  std::vector<double> lambda_guides;  // e.g. +-lambda_hat

  static DiagramSpec from_run(const DomainSpec& domain, const ProblemField& problem,
                              const std::vector<BoundMonitor>& monitors) {
    DiagramSpec d;
    d.lambda_min = domain.lambda_min;
    d.lambda_max = domain.lambda_max;
    d.c1_ceiling = domain.c1_ceiling;
    if (problem.lambda_interval.bounded()) {
      d.interval_lo = problem.lambda_interval.lo;
      d.interval_hi = problem.lambda_interval.hi;
    }
    for (const auto& m : monitors)
      if (m.quantity == Quantity::AbsLambda) {
        const double hat = m.bound_fn(0.0);
        d.lambda_guides.push_back(hat);
        d.lambda_guides.push_back(-hat);
      }
    return d;
  }
};

// A branch reduced to its diagram trace: (lambda, c1) in path order.
using DiagramPolyline = std::vector<std::pair<double, double>>;

namespace svg_detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Path order: backward direction reversed, then the start, then forward.
inline DiagramPolyline polyline_from_points(const std::vector<BranchCsvRow>& rows) {
  std::vector<const BranchCsvRow*> fwd, bwd;
  const BranchCsvRow* start = nullptr;
  for (const auto& r : rows) {
    if (r.arclength > 0.0)
      fwd.push_back(&r);
    else if (r.arclength < 0.0)
      bwd.push_back(&r);
    else
      start = &r;
  }
  const auto by_arc = [](const BranchCsvRow* a, const BranchCsvRow* b) {
    return a->arclength < b->arclength;
  };
  std::sort(fwd.begin(), fwd.end(), by_arc);
  std::sort(bwd.begin(), bwd.end(), by_arc);
  DiagramPolyline line;
  for (const auto* r : bwd) line.emplace_back(r->lambda, r->c1_norm);
  if (start) line.emplace_back(start->lambda, start->c1_norm);
  for (const auto* r : fwd) line.emplace_back(r->lambda, r->c1_norm);
  return line;
}

inline DiagramPolyline polyline_from_branch(const Branch& branch) {
  std::vector<BranchCsvRow> rows;
  rows.reserve(branch.points.size());
  for (const auto& p : branch.points) {
    BranchCsvRow r;
    r.lambda = p.pair.lambda;
    r.c1_norm = p.point_norms.c1;
    r.arclength = p.arclength;
    rows.push_back(r);
  }
  return polyline_from_points(rows);
}

}  // namespace svg_detail

inline void render_diagram_svg_lines(const std::vector<DiagramPolyline>& lines,
                                     const DiagramSpec& spec, const std::string& path) {
  if (lines.empty()) fail(errc::invalid_params, "render_diagram_svg: no branches");
  for (const auto& l : lines)
    if (l.empty()) fail(errc::invalid_params, "render_diagram_svg: empty branch");

  const double width = 800.0, height = 560.0;
  const double ml = 70.0, mr = 25.0, mt = 25.0, mb = 55.0;

  double lo = spec.lambda_min, hi = spec.lambda_max;
  double ymax = spec.c1_ceiling;
  for (const auto& l : lines)
    for (const auto& [lam, c1] : l) {
      lo = std::min(lo, lam);
      hi = std::max(hi, lam);
      ymax = std::max(ymax, c1);
    }
  if (spec.interval_lo) lo = std::min(lo, *spec.interval_lo);
  if (spec.interval_hi) hi = std::max(hi, *spec.interval_hi);
  const double xpad = 0.03 * (hi - lo);
  lo -= xpad;
  hi += xpad;
  ymax *= 1.06;

  const auto X = [&](double lam) { return ml + (lam - lo) / (hi - lo) * (width - ml - mr); };
  const auto Y = [&](double c1) { return height - mb - c1 / ymax * (height - mt - mb); };

  using svg_detail::fmt;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " "
      << fmt(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes.
  out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(height - mb) << "\" x2=\""
      << fmt(width - mr) << "\" y2=\"" << fmt(height - mb)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << fmt(X(0.0)) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(X(0.0))
      << "\" y2=\"" << fmt(height - mb) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << fmt(width - mr - 10.0) << "\" y=\"" << fmt(height - mb + 30.0)
      << "\" font-size=\"18\">\xce\xbb</text>\n";
  out << "<text x=\"" << fmt(ml - 60.0) << "\" y=\"" << fmt(mt + 10.0)
      << "\" font-size=\"15\">||x||_C1</text>\n";

  // Dashed guides: admissible-interval endpoints, lambda_hat thresholds,
  // norm ceiling.
  const auto vguide = [&](double lam) {
    out << "<line x1=\"" << fmt(X(lam)) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(X(lam))
        << "\" y2=\"" << fmt(height - mb)
        << "\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
  };
  if (spec.interval_lo) vguide(*spec.interval_lo);
  if (spec.interval_hi) vguide(*spec.interval_hi);
  for (const double lam : spec.lambda_guides)
    if (lam > lo && lam < hi) vguide(lam);
  out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(Y(spec.c1_ceiling)) << "\" x2=\""
      << fmt(width - mr) << "\" y2=\"" << fmt(Y(spec.c1_ceiling))
      << "\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 5]
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < lines[i].size(); ++k) {
      if (k) out << ' ';
      out << fmt(X(lines[i][k].first)) << ',' << fmt(Y(lines[i][k].second));
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline void render_diagram_svg(const std::vector<Branch>& branches, const DiagramSpec& spec,
                               const std::string& path) {
  std::vector<DiagramPolyline> lines;
  lines.reserve(branches.size());
  for (const auto& b : branches) lines.push_back(svg_detail::polyline_from_branch(b));
  render_diagram_svg_lines(lines, spec, path);
}

}  // namespace phibranch
