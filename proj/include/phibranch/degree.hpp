// Brouwer degree on boxes in R^1 and R^2: sign change in 1D, adaptive
// boundary winding in 2D, a brute-force preimage-count oracle, a Borsuk
// odd-map shortcut (any dimension), zero location by recursive bisection,
// and the finite-dimensional reduction identity used to certify bifurcation
// points.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <utility>
#include <vector>

#include "phibranch/phi.hpp"
#include "phibranch/problem.hpp"
#include "phibranch/rng.hpp"

namespace phibranch {

using MapFn = std::function<Vec(const Vec&)>;
using ScalarFn = std::function<double(double)>;

struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() == 0)
      fail(errc::invalid_params, "Box bounds must have equal nonzero dimension");
    for (int i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) fail(errc::invalid_params, "Box requires lower < upper");
  }

  static Box interval(double lo, double hi) {
    return Box(Vec::Constant(1, lo), Vec::Constant(1, hi));
  }
  static Box square(double lo, double hi) {
    Vec l(2), u(2);
    l << lo, lo;
    u << hi, hi;
    return Box(l, u);
  }
  static Box product(const Box& a, const Box& b) {
    Vec l(a.dim() + b.dim()), u(a.dim() + b.dim());
    l << a.lower, b.lower;
    u << a.upper, b.upper;
    return Box(l, u);
  }

  int dim() const { return static_cast<int>(lower.size()); }
  Vec center() const { return 0.5 * (lower + upper); }
  Vec widths() const { return upper - lower; }
  double diameter() const { return (upper - lower).norm(); }
  bool contains(const Vec& p, double slack = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (p[i] < lower[i] - slack || p[i] > upper[i] + slack) return false;
    return true;
  }
  bool symmetric() const { return (lower + upper).norm() <= 1e-14 * widths().norm(); }
};

struct DegreeResult {
  int degree = 0;
  double boundary_min_norm = 0.0;
  long evaluations = 0;
};

// ---------------------------------------------------------------------------
// 1D: degree = (sign f(b) - sign f(a)) / 2.

inline DegreeResult degree_1d(const ScalarFn& f, double lo, double hi) {
  const double fa = f(lo), fb = f(hi);
  const double scale = std::max(std::abs(fa), std::abs(fb));
  if (scale == 0.0 || std::min(std::abs(fa), std::abs(fb)) <= 1e-12 * scale)
    fail(errc::boundary_zero, "degree_1d: endpoint value numerically zero");
  const int sa = fa > 0 ? 1 : -1, sb = fb > 0 ? 1 : -1;
  return DegreeResult{(sb - sa) / 2, std::min(std::abs(fa), std::abs(fb)), 2};
}

inline DegreeResult degree_1d(const ScalarFn& f, const Box& box) {
  if (box.dim() != 1) fail(errc::invalid_params, "degree_1d needs a 1D box");
  return degree_1d(f, box.lower[0], box.upper[0]);
}

// ---------------------------------------------------------------------------
// 2D winding: traverse the boundary counterclockwise, adaptively bisecting
// until consecutive image vectors subtend an angle < pi/2, then sum the
// signed angle increments. Rejects when the total is not close to a
// multiple of 2*pi or when the map gets relatively small on the boundary.

namespace degree_detail {

struct WindingState {
  long evaluations = 0;
  long segments = 0;
  double min_norm = std::numeric_limits<double>::infinity();
  double max_norm = 0.0;
};

inline Vec eval_checked(const MapFn& f, const Vec& p, WindingState& st) {
  const Vec v = f(p);
  ++st.evaluations;
  const double nv = v.norm();
  st.min_norm = std::min(st.min_norm, nv);
  st.max_norm = std::max(st.max_norm, nv);
  if (nv <= 1e-9 * st.max_norm)
    fail(errc::boundary_zero, "degree_2d_winding: boundary sample numerically zero");
  return v;
}

constexpr long kMaxSegments = 1L << 20;

// Signed angle accumulated over the boundary path from p to q (values fp,fq
// already computed). Splits until the turn per segment is below pi/2.
inline double winding_segment(const MapFn& f, const Vec& p, const Vec& q, const Vec& fp,
                              const Vec& fq, WindingState& st, int depth) {
  const double cross = fp[0] * fq[1] - fp[1] * fq[0];
  const double dot = fp.dot(fq);
  const double angle = std::atan2(cross, dot);
  if (std::abs(angle) < M_PI / 2.0 && depth > 0) return angle;
  if (++st.segments > kMaxSegments || depth > 60)
    fail(errc::no_angle_convergence, "degree_2d_winding: subdivision limit exceeded");
  const Vec m = 0.5 * (p + q);
  const Vec fm = eval_checked(f, m, st);
  return winding_segment(f, p, m, fp, fm, st, depth + 1) +
         winding_segment(f, m, q, fm, fq, st, depth + 1);
}

}  // namespace degree_detail

inline DegreeResult degree_2d_winding(const MapFn& f, const Box& box) {
  if (box.dim() != 2) fail(errc::invalid_params, "degree_2d_winding needs a planar box");
  using namespace degree_detail;

  // Counterclockwise corner loop with a few seed points per edge.
  const int seeds_per_edge = 8;
  std::vector<Vec> pts;
  const auto push_edge = [&](const Vec& a, const Vec& b) {
    for (int k = 0; k < seeds_per_edge; ++k) {
      const double t = static_cast<double>(k) / seeds_per_edge;
      pts.push_back(a + t * (b - a));
    }
  };
  Vec c00 = box.lower, c11 = box.upper, c10(2), c01(2);
  c10 << box.upper[0], box.lower[1];
  c01 << box.lower[0], box.upper[1];
  push_edge(c00, c10);
  push_edge(c10, c11);
  push_edge(c11, c01);
  push_edge(c01, c00);

  WindingState st;
  std::vector<Vec> vals;
  vals.reserve(pts.size());
  for (const Vec& p : pts) vals.push_back(eval_checked(f, p, st));

  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t j = (i + 1) % pts.size();
    total += winding_segment(f, pts[i], pts[j], vals[i], vals[j], st, 0);
  }

  if (st.min_norm <= 1e-9 * st.max_norm)
    fail(errc::boundary_zero, "degree_2d_winding: map relatively zero on boundary");

  const double turns = total / (2.0 * M_PI);
  const double rounded = std::round(turns);
  if (std::abs(turns - rounded) > 0.25)
    fail(errc::no_angle_convergence, "degree_2d_winding: rounding residual exceeds 0.25");
  return DegreeResult{static_cast<int>(rounded), st.min_norm, st.evaluations};
}

// Dimension dispatch for maps R^n -> R^n, n in {1,2}.
inline DegreeResult degree_on_box(const MapFn& f, const Box& box) {
  if (box.dim() == 1) {
    const ScalarFn g = [&f](double x) { return f(Vec::Constant(1, x))[0]; };
    return degree_1d(g, box);
  }
  if (box.dim() == 2) return degree_2d_winding(f, box);
  fail(errc::unsupported_operator, "exact degree computation limited to n in {1,2}");
}

// ---------------------------------------------------------------------------
// Oracle: signed count of preimages of a regular value. Dense grid scan for
// cells where both components change sign, then Newton polish; the sign of
// the central-difference Jacobian determinant at each preimage contributes.

namespace degree_detail {

inline Eigen::Matrix2d fd_jacobian_2d(const MapFn& f, const Vec& p, double h) {
  Eigen::Matrix2d J;
  for (int i = 0; i < 2; ++i) {
    Vec pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const Vec dp = f(pp), dm = f(pm);
    J(0, i) = (dp[0] - dm[0]) / (2 * h);
    J(1, i) = (dp[1] - dm[1]) / (2 * h);
  }
  return J;
}

inline bool newton_polish_2d(const MapFn& f, Vec& p, double tol, int iters, double fd_h) {
  for (int k = 0; k < iters; ++k) {
    const Vec v = f(p);
    if (v.norm() <= tol) return true;
    const Eigen::Matrix2d J = fd_jacobian_2d(f, p, fd_h);
    const double det = J.determinant();
    if (std::abs(det) < 1e-300) return false;
    const Eigen::Vector2d step = J.inverse() * Eigen::Vector2d(v[0], v[1]);
    p[0] -= step[0];
    p[1] -= step[1];
  }
  return f(p).norm() <= tol;
}

}  // namespace degree_detail

inline int degree_oracle_preimage(const MapFn& f, const Box& box, const Vec& regular_value,
                                  int grid = 400) {
  if (box.dim() != 2) fail(errc::invalid_params, "degree_oracle_preimage is planar");
  const MapFn g = [&](const Vec& p) -> Vec { return f(p) - regular_value; };

  const Vec w = box.widths();
  const double hx = w[0] / grid, hy = w[1] / grid;
  Mat v1(grid + 1, grid + 1), v2(grid + 1, grid + 1);
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; j <= grid; ++j) {
      Vec p(2);
      p << box.lower[0] + i * hx, box.lower[1] + j * hy;
      const Vec val = g(p);
      v1(i, j) = val[0];
      v2(i, j) = val[1];
    }

  const auto changes_sign = [](double a, double b, double c, double d) {
    const double mn = std::min(std::min(a, b), std::min(c, d));
    const double mx = std::max(std::max(a, b), std::max(c, d));
    return mn <= 0.0 && mx >= 0.0;
  };

  std::vector<Vec> roots;
  const double same_root_tol = 1e-7 * (1.0 + box.diameter());
  const double polish_tol = 1e-11;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      if (!changes_sign(v1(i, j), v1(i + 1, j), v1(i, j + 1), v1(i + 1, j + 1))) continue;
      if (!changes_sign(v2(i, j), v2(i + 1, j), v2(i, j + 1), v2(i + 1, j + 1))) continue;
      Vec p(2);
      p << box.lower[0] + (i + 0.5) * hx, box.lower[1] + (j + 0.5) * hy;
      if (!degree_detail::newton_polish_2d(g, p, polish_tol, 60, 1e-7)) continue;
      if (!box.contains(p, 1e-12)) continue;
      bool duplicate = false;
      for (const Vec& r : roots)
        if ((r - p).norm() < same_root_tol) duplicate = true;
      if (!duplicate) roots.push_back(p);
    }

  int total = 0;
  for (const Vec& r : roots) {
    for (int i = 0; i < 2; ++i)
      if (std::min(r[i] - box.lower[i], box.upper[i] - r[i]) < 1e-6)
        fail(errc::suspect_degenerate,
             "degree_oracle_preimage: preimage within 1e-6 of the boundary, pick another value");
    const Eigen::Matrix2d J = degree_detail::fd_jacobian_2d(g, r, 1e-6);
    const double det = J.determinant();
    const double scale = J.squaredNorm();
    if (std::abs(det) < 1e-8 * std::max(scale, 1e-300))
      fail(errc::suspect_degenerate,
           "degree_oracle_preimage: near-singular Jacobian at a preimage, pick another value");
    total += det > 0 ? 1 : -1;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Borsuk shortcut (any dimension). Samples boundary points of a symmetric box;
// verified oddness implies odd, hence nonzero, degree.

enum class OddCheck { OddHenceNonzero, NotVerifiedOdd };

namespace degree_detail {

inline std::vector<Vec> sample_symmetric_boundary(const Box& box, int samples, Rng& rng) {
  const int n = box.dim();
  std::vector<Vec> pts;
  pts.reserve(samples + 2 * n);
  // Face centers first: alignment failures often sit on symmetry axes.
  for (int i = 0; i < n; ++i) {
    Vec c = box.center();
    c[i] = box.lower[i];
    pts.push_back(c);
    c[i] = box.upper[i];
    pts.push_back(c);
  }
  for (int k = 0; k < samples; ++k) {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = rng.uniform(box.lower[i], box.upper[i]);
    const int face = rng.next_index(n);
    p[face] = rng.next_double() < 0.5 ? box.lower[face] : box.upper[face];
    pts.push_back(p);
  }
  return pts;
}

}  // namespace degree_detail

// Strict sampled-oddness test: f(-p) == -f(p) within 1e-9 * scale.
inline OddCheck degree_odd_shortcut(const MapFn& f, const Box& box, int samples = 256,
                                    std::uint64_t seed = 42) {
  if (!box.symmetric()) fail(errc::invalid_params, "degree_odd_shortcut needs lower == -upper");
  Rng rng(seed);
  const auto pts = degree_detail::sample_symmetric_boundary(box, samples, rng);
  double scale = 0.0;
  std::vector<Vec> fp, fm;
  for (const Vec& p : pts) {
    fp.push_back(f(p));
    fm.push_back(f(-p));
    scale = std::max({scale, fp.back().norm(), fm.back().norm()});
  }
  if (scale == 0.0) fail(errc::boundary_zero, "odd shortcut: map vanishes on all samples");
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (fp[k].norm() <= 1e-9 * scale || fm[k].norm() <= 1e-9 * scale)
      fail(errc::boundary_zero, "odd shortcut: boundary sample numerically zero");
    if ((fm[k] + fp[k]).norm() > 1e-9 * scale) return OddCheck::NotVerifiedOdd;
  }
  return OddCheck::OddHenceNonzero;
}

// Weaker Borsuk-type condition: f(-p) is never a multiple mu >= 1 of f(p) on
// the sampled boundary. Verified via the angle/ratio test; also certifies an
// odd, hence nonzero, degree.
inline OddCheck borsuk_no_positive_multiple(const MapFn& f, const Box& box, int samples = 256,
                                            std::uint64_t seed = 42) {
  if (!box.symmetric())
    fail(errc::invalid_params, "borsuk_no_positive_multiple needs lower == -upper");
  Rng rng(seed);
  const auto pts = degree_detail::sample_symmetric_boundary(box, samples, rng);
  double scale = 0.0;
  std::vector<Vec> fp, fm;
  for (const Vec& p : pts) {
    fp.push_back(f(p));
    fm.push_back(f(-p));
    scale = std::max({scale, fp.back().norm(), fm.back().norm()});
  }
  if (scale == 0.0) fail(errc::boundary_zero, "borsuk check: map vanishes on all samples");
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (fp[k].norm() <= 1e-9 * scale || fm[k].norm() <= 1e-9 * scale)
      fail(errc::boundary_zero, "borsuk check: boundary sample numerically zero");
    // f(-p) = mu f(p), mu >= 1  <=>  aligned directions and |f(-p)| >= |f(p)|.
    // Conservative numerically: near-alignment (< 0.05 rad) already fails the
    // verification.
    const double cosang = fm[k].dot(fp[k]) / (fm[k].norm() * fp[k].norm());
    if (cosang > std::cos(0.05) && fm[k].norm() >= fp[k].norm() * (1.0 - 1e-9))
      return OddCheck::NotVerifiedOdd;
  }
  return OddCheck::OddHenceNonzero;
}

// ---------------------------------------------------------------------------
// Zero location for f0(.,0): recursive bisection driven by the degree, with
// sign-change sampling to keep degree-zero boxes containing cancelling pairs,
// Newton polish at leaf level, and the local degree of a small surrounding
// box per zero. Cut lines that hit a zero are retried with escalating random
// offsets before giving up.

struct LocatedZero {
  Vec zero;
  int local_degree = 0;
};

namespace degree_detail {

inline bool maybe_contains_zero(const MapFn& f, const Box& box) {
  // Sample a small lattice; a component of constant strict sign rules the
  // box out. Heuristic pruning for degree-zero boxes only.
  const int n = box.dim();
  const int m = n == 1 ? 9 : 5;
  std::vector<Vec> samples;
  if (n == 1) {
    for (int i = 0; i < m; ++i)
      samples.push_back(box.lower +
                        (box.upper - box.lower) * (static_cast<double>(i) / (m - 1)));
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Vec p(2);
        p << box.lower[0] + (box.upper[0] - box.lower[0]) * i / (m - 1),
            box.lower[1] + (box.upper[1] - box.lower[1]) * j / (m - 1);
        samples.push_back(p);
      }
  }
  for (int c = 0; c < n; ++c) {
    bool all_pos = true, all_neg = true;
    for (const Vec& p : samples) {
      const double v = f(p)[c];
      all_pos = all_pos && v > 0.0;
      all_neg = all_neg && v < 0.0;
    }
    if (all_pos || all_neg) return false;
  }
  return true;
}

inline bool newton_polish_nd(const MapFn& f, Vec& p, double tol, int iters) {
  if (p.size() == 2) return newton_polish_2d(f, p, tol, iters, 1e-7);
  for (int k = 0; k < iters; ++k) {
    const double v = f(p)[0];
    if (std::abs(v) <= tol) return true;
    const double h = 1e-7 * (1.0 + std::abs(p[0]));
    Vec pp = p, pm = p;
    pp[0] += h;
    pm[0] -= h;
    const double d = (f(pp)[0] - f(pm)[0]) / (2 * h);
    if (std::abs(d) < 1e-300) return false;
    p[0] -= v / d;
  }
  return std::abs(f(p)[0]) <= tol;
}

struct LocateContext {
  const MapFn& f;
  Rng rng;
  std::vector<Vec> candidates;
};

inline void locate_recurse(LocateContext& ctx, const Box& box, int deg) {
  if (deg == 0 && !maybe_contains_zero(ctx.f, box)) return;
  if (box.diameter() < 1e-6) {
    ctx.candidates.push_back(box.center());
    return;
  }

  int axis = 0;
  box.widths().maxCoeff(&axis);
  const double width = box.widths()[axis];

  // Escalate the cut offset when the new boundary keeps hitting a zero;
  // degenerate zeros (e.g. cubic) need offsets well above 1e-4 * width to
  // clear the relative boundary-zero threshold.
  for (int retry = 0; retry <= 5; ++retry) {
    double cut = 0.5 * (box.lower[axis] + box.upper[axis]);
    if (retry > 0)
      cut += ctx.rng.uniform(-1.0, 1.0) * 1e-4 * std::pow(4.0, retry) * width;
    if (cut <= box.lower[axis] || cut >= box.upper[axis]) continue;
    Box b1 = box, b2 = box;
    b1.upper[axis] = cut;
    b2.lower[axis] = cut;
    int d1 = 0, d2 = 0;
    try {
      d1 = degree_on_box(ctx.f, b1).degree;
      d2 = degree_on_box(ctx.f, b2).degree;
    } catch (const Error& e) {
      if (e.code() == errc::boundary_zero || e.code() == errc::no_angle_convergence) continue;
      throw;
    }
    locate_recurse(ctx, b1, d1);
    locate_recurse(ctx, b2, d2);
    return;
  }
  fail(errc::zero_on_cut_line, "locate_zeros_f0: could not find a zero-free cut line");
}

}  // namespace degree_detail

inline std::vector<LocatedZero> locate_zeros_f0(const MapFn& f0_slice, const Box& box,
                                                std::uint64_t seed = 42) {
  const int top_degree = degree_on_box(f0_slice, box).degree;  // also checks the boundary
  degree_detail::LocateContext ctx{f0_slice, Rng(seed), {}};
  degree_detail::locate_recurse(ctx, box, top_degree);

  std::vector<LocatedZero> out;
  const double dedupe_tol = 1e-5 * (1.0 + box.diameter());
  for (Vec p : ctx.candidates) {
    if (!degree_detail::newton_polish_nd(f0_slice, p, 1e-11, 80)) continue;
    if (!box.contains(p, 1e-9)) continue;
    bool duplicate = false;
    for (const auto& z : out)
      if ((z.zero - p).norm() < dedupe_tol) duplicate = true;
    if (duplicate) continue;

    // Local degree of a small surrounding box, widened on boundary trouble.
    int local = 0;
    double half = 1e-4;
    for (int attempt = 0; attempt < 6; ++attempt, half *= 2.0) {
      try {
        Box small(p.array() - half, p.array() + half);
        local = degree_on_box(f0_slice, small).degree;
        break;
      } catch (const Error& e) {
        if (attempt == 5) throw;
        if (e.code() != errc::boundary_zero && e.code() != errc::no_angle_convergence) throw;
      }
    }
    out.push_back(LocatedZero{p, local});
  }
  std::sort(out.begin(), out.end(), [](const LocatedZero& a, const LocatedZero& b) {
    for (int i = 0; i < a.zero.size(); ++i)
      if (a.zero[i] != b.zero[i]) return a.zero[i] < b.zero[i];
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Finite-dimensional reduction identity (scalar problems): the degree of
//   frak_f0(x1,x2) = (phi^{-1}(x2), f0(x1, phi^{-1}(x2)))
// on box1 x box2 against (-1)^n deg(phi^{-1}, box2) deg(f0(.,0), box1).
// Exact sign equality holds under this module's orientation conventions;
// |lhs| == |rhs| is the documented fallback comparison (the coincidence
// degree's sign depends on the choice of J).

struct ReductionCheckResult {
  int lhs = 0;
  int rhs = 0;
  bool equal_signed() const { return lhs == rhs; }
  bool equal_abs() const { return std::abs(lhs) == std::abs(rhs); }
};

inline ReductionCheckResult reduction_check(
    const PhiOperator& phi, const std::function<double(double, double)>& f0, const Box& box1,
    const Box& box2) {
  if (box1.dim() != 1 || box2.dim() != 1)
    fail(errc::invalid_params, "reduction_check handles scalar problems (n = 1)");

  const MapFn frak = [&](const Vec& p) -> Vec {
    const Vec inv = phi.inverse(Vec::Constant(1, p[1]));
    Vec out(2);
    out << inv[0], f0(p[0], inv[0]);
    return out;
  };
  const int lhs = degree_2d_winding(frak, Box::product(box1, box2)).degree;

  const ScalarFn phi_inv_1d = [&](double x) { return phi.inverse(Vec::Constant(1, x))[0]; };
  const ScalarFn f0_slice = [&](double x) { return f0(x, 0.0); };
  const int rhs = -degree_1d(phi_inv_1d, box2).degree * degree_1d(f0_slice, box1).degree;
  return ReductionCheckResult{lhs, rhs};
}

}  // namespace phibranch
