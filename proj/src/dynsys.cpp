#include "qpot/dynsys.hpp"

#include "qpot/ode.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qpot {

std::string_view to_string(FixedPointKind k) {
  switch (k) {
    case FixedPointKind::StableNode: return "stable-node";
    case FixedPointKind::Saddle: return "saddle";
    case FixedPointKind::Unstable: return "unstable";
  }
  return "unknown";
}

FixedPoint classify_fixed_point(const SystemSpec& sys, const StateVec& x) {
  Eigen::EigenSolver<Mat2> es(sys.jacobian(x));
  FixedPoint fp;
  fp.location = x;
  for (int i = 0; i < 2; ++i) {
    fp.eigenvalues[i] = es.eigenvalues()(i);
    Vec2 v = es.eigenvectors().col(i).real();
    if (v.norm() == 0.0) v = es.eigenvectors().col(i).imag();
    fp.eigenvectors[i] = v.normalized();
  }
  // Order eigenpairs by ascending real part.
  if (fp.eigenvalues[0].real() > fp.eigenvalues[1].real()) {
    std::swap(fp.eigenvalues[0], fp.eigenvalues[1]);
    std::swap(fp.eigenvectors[0], fp.eigenvectors[1]);
  }
  const double lo = fp.eigenvalues[0].real();
  const double hi = fp.eigenvalues[1].real();
  if (hi < 0.0) {
    fp.kind = FixedPointKind::StableNode;
  } else if (lo < 0.0 && hi > 0.0 && fp.eigenvalues[0].imag() == 0.0) {
    fp.kind = FixedPointKind::Saddle;
  } else {
    fp.kind = FixedPointKind::Unstable;
  }
  return fp;
}

namespace {

double polish_cubic_root(double lo, double hi, const SystemParams& p) {
  double flo = equilibrium_cubic(lo, p).f;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = equilibrium_cubic(mid, p).f;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 5; ++i) {
    const auto c = equilibrium_cubic(x, p);
    if (c.df == 0.0) break;
    const double nx = x - c.f / c.df;
    if (!(nx > lo - 1e-9 && nx < hi + 1e-9)) break;
    x = nx;
  }
  return x;
}

}  // namespace

std::vector<FixedPoint> find_fixed_points(const SystemParams& p) {
  const SystemSpec sys = vegetation_system(p);
  std::vector<FixedPoint> out;
  out.push_back(classify_fixed_point(sys, StateVec(0.0, p.R / p.alpha)));

  // Interior roots need x2 > x1/K with x2 <= R/alpha, so x1 < K R / alpha.
  const double upper = std::max(p.K, p.K * p.R / p.alpha);
  constexpr int kCells = 4000;
  double prev_x = 0.0;
  double prev_f = equilibrium_cubic(prev_x, p).f;
  for (int i = 1; i <= kCells; ++i) {
    const double x = upper * i / kCells;
    const double f = equilibrium_cubic(x, p).f;
    if (f == 0.0) {
      out.push_back(classify_fixed_point(sys, StateVec(x, p.R / (p.lambda * x + p.alpha))));
    } else if (prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0)) {
      const double r = polish_cubic_root(prev_x, x, p);
      if (r > 0.0) out.push_back(classify_fixed_point(sys, StateVec(r, p.R / (p.lambda * r + p.alpha))));
    }
    prev_x = x;
    prev_f = f;
  }
  std::sort(out.begin(), out.end(), [](const FixedPoint& a, const FixedPoint& b) {
    return a.location(0) < b.location(0);
  });
  return out;
}

std::optional<BistableStructure> bistable_structure(const SystemParams& p) {
  const auto fps = find_fixed_points(p);
  if (fps.size() != 3) return std::nullopt;
  if (fps[0].kind != FixedPointKind::StableNode || fps[1].kind != FixedPointKind::Saddle ||
      fps[2].kind != FixedPointKind::StableNode) {
    return std::nullopt;
  }
  return BistableStructure{fps[0], fps[1], fps[2]};
}

SaddleNode saddle_node_critical(const SystemParams& p, int max_iter) {
  SystemParams q = p;
  // df/dR and df'/dR are linear in x1; the second derivative drives the x1 update.
  double x1 = 2.0;
  double R = 1.5;
  for (int it = 0; it < max_iter; ++it) {
    q.R = R;
    const auto c = equilibrium_cubic(x1, q);
    const double d2f = 6.0 * q.rho * q.lambda * x1 + 2.0 * q.rho * (q.lambda * q.x0 + q.alpha);
    const double df_dR = -q.rho * q.K * (x1 + q.x0);
    const double dfp_dR = -q.rho * q.K;
    Eigen::Matrix2d jac;
    jac << c.df, df_dR, d2f, dfp_dR;
    const Eigen::Vector2d step = jac.fullPivLu().solve(Eigen::Vector2d(c.f, c.df));
    if (!step.allFinite()) break;
    x1 -= step(0);
    R -= step(1);
    if (step.norm() < 1e-14 * std::max(1.0, std::abs(R))) return {R, x1};
  }
  throw std::runtime_error("saddle-node Newton iteration did not converge");
}

double sn1_stability_threshold(const SystemParams& p) {
  // f(0; R) = K beta alpha - rho R K x0 is linear in R.
  return p.beta * p.alpha / (p.rho * p.x0);
}

std::vector<BranchRow> bifurcation_branch(std::span<const double> R_grid, const SystemParams& base) {
  if (!std::is_sorted(R_grid.begin(), R_grid.end())) {
    throw std::invalid_argument("bifurcation grid must be sorted ascending");
  }
  std::vector<BranchRow> rows;
  for (double R : R_grid) {
    SystemParams p = base;
    p.R = R;
    for (const auto& fp : find_fixed_points(p)) {
      rows.push_back({R, fp.location, fp.kind, fp.location(0) > 0.0});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Separatrix

Separatrix::Separatrix(std::vector<StateVec> points, std::size_t saddle_index)
    : points_(std::move(points)), saddle_index_(saddle_index) {
  arclength_.resize(points_.size());
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) s += (points_[i] - points_[i - 1]).norm();
    arclength_[i] = s;
  }
}

double Separatrix::max_spacing() const {
  double m = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) m = std::max(m, (points_[i] - points_[i - 1]).norm());
  return m;
}

namespace {

double point_segment_distance(const StateVec& x, const StateVec& a, const StateVec& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

double cross(const Vec2& u, const Vec2& v) { return u(0) * v(1) - u(1) * v(0); }

bool segments_cross(const StateVec& a, const StateVec& b, const StateVec& p, const StateVec& q) {
  const double d1 = cross(b - a, p - a);
  const double d2 = cross(b - a, q - a);
  const double d3 = cross(q - p, a - p);
  const double d4 = cross(q - p, b - p);
  // Half-open in the polyline segment: p counts, q does not.
  const bool straddle_ab = (d1 >= 0.0) != (d2 >= 0.0);
  const bool straddle_pq = (d3 > 0.0) != (d4 > 0.0);
  return straddle_ab && straddle_pq;
}

}  // namespace

double Separatrix::distance(const StateVec& x) const {
  if (points_.empty()) return std::numeric_limits<double>::infinity();
  if (points_.size() == 1) return (x - points_[0]).norm();
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points_.size(); ++i) {
    d = std::min(d, point_segment_distance(x, points_[i - 1], points_[i]));
  }
  return d;
}

int Separatrix::crossings(const StateVec& a, const StateVec& b) const {
  int n = 0;
  const double xmin = std::min(a(0), b(0));
  const double xmax = std::max(a(0), b(0));
  const double ymin = std::min(a(1), b(1));
  const double ymax = std::max(a(1), b(1));
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const StateVec& p = points_[i - 1];
    const StateVec& q = points_[i];
    if (std::max(p(0), q(0)) < xmin || std::min(p(0), q(0)) > xmax || std::max(p(1), q(1)) < ymin ||
        std::min(p(1), q(1)) > ymax) {
      continue;
    }
    if (segments_cross(a, b, p, q)) ++n;
  }
  return n;
}

Separatrix Separatrix::resampled(double spacing) const {
  if (points_.size() < 2) return *this;
  std::vector<StateVec> out;
  std::size_t new_saddle = 0;
  auto emit_piece = [&](std::size_t from, std::size_t to) {
    // Uniform arc-length samples over points_[from..to], inclusive of both ends.
    const double s0 = arclength_[from];
    const double s1 = arclength_[to];
    const int n = std::max(1, static_cast<int>(std::ceil((s1 - s0) / spacing)));
    std::size_t seg = from;
    for (int k = 0; k <= n; ++k) {
      const double s = (k == n) ? s1 : s0 + (s1 - s0) * k / n;
      while (seg + 1 < to && arclength_[seg + 1] < s) ++seg;
      const double ds = arclength_[seg + 1] - arclength_[seg];
      const double t = ds > 0.0 ? std::clamp((s - arclength_[seg]) / ds, 0.0, 1.0) : 0.0;
      StateVec x = (k == n) ? points_[to] : StateVec(points_[seg] + t * (points_[seg + 1] - points_[seg]));
      if (k == 0 && !out.empty()) continue;
      out.push_back(x);
    }
  };
  if (saddle_index_ > 0) {
    emit_piece(0, saddle_index_);
  } else {
    out.push_back(points_[0]);
  }
  new_saddle = out.size() - 1;
  if (saddle_index_ + 1 < points_.size()) emit_piece(saddle_index_, points_.size() - 1);
  Separatrix r(std::move(out), new_saddle);
  r.interior_attractor = interior_attractor;
  r.exterior_attractor = exterior_attractor;
  r.drift = drift;
  return r;
}

namespace {

enum class TraceStop { LeftBox, Captured };

/// Follows the flow (or its reverse when `time_sign` < 0) from `start`.
std::vector<StateVec> trace_branch(const SystemSpec& sys, const StateVec& start, double time_sign,
                                   const Box& box, std::span<const StateVec> attractors,
                                   const ManifoldOptions& opt, TraceStop* why) {
  const auto field = [&](const Vec2& y) -> Vec2 { return time_sign * sys.drift(y); };
  ode::AdaptiveOptions ao;
  ao.rel_tol = opt.rel_tol;
  ao.abs_tol = 1e-14;
  ao.h_init = 1e-3;
  ao.h_max = 0.02;
  std::vector<StateVec> out{start};
  Vec2 y = start;
  double h = ao.h_init;
  double t = 0.0;
  while (t < opt.max_time) {
    const Vec2 prev = y;
    t += std::abs(ode::rk4_adaptive_step(field, y, h, ao));
    // Keep geometric resolution bounded in state space.
    if ((y - prev).norm() > 0.5 * opt.max_spacing) h *= 0.5;
    if (!box.contains(y)) {
      // Clip the last segment to the box edge.
      double lo = 0.0;
      double hi = 1.0;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (box.contains(StateVec(prev + mid * (y - prev))) ? lo : hi) = mid;
      }
      out.emplace_back(prev + lo * (y - prev));
      *why = TraceStop::LeftBox;
      return out;
    }
    out.push_back(y);
    for (const auto& a : attractors) {
      if ((y - a).norm() <= opt.capture_radius) {
        *why = TraceStop::Captured;
        return out;
      }
    }
    if (out.size() > 50 && (y - prev).norm() < 1e-14) {
      throw std::runtime_error("manifold trace stalled inside the box");
    }
  }
  throw std::runtime_error("manifold trace exceeded its time budget without leaving the box");
}

Separatrix join_branches(std::vector<StateVec> left, const StateVec& saddle, std::vector<StateVec> right,
                         double spacing) {
  std::vector<StateVec> pts(left.rbegin(), left.rend());
  pts.push_back(saddle);
  const std::size_t s = pts.size() - 1;
  pts.insert(pts.end(), right.begin(), right.end());
  return Separatrix(std::move(pts), s).resampled(spacing);
}

}  // namespace

Separatrix stable_manifold(const SystemSpec& sys, const FixedPoint& saddle, const Box& box,
                           std::span<const StateVec> attractors, const ManifoldOptions& opt) {
  if (saddle.kind != FixedPointKind::Saddle) throw std::invalid_argument("stable_manifold needs a saddle");
  const Vec2 vs = saddle.eigenvectors[0];  // negative eigenvalue
  TraceStop why{};
  auto a = trace_branch(sys, saddle.location + opt.offset * vs, -1.0, box, {}, opt, &why);
  auto b = trace_branch(sys, saddle.location - opt.offset * vs, -1.0, box, {}, opt, &why);
  Separatrix sep = join_branches(std::move(a), saddle.location, std::move(b), opt.max_spacing);
  sep.drift = sys.drift;
  if (attractors.size() >= 2) {
    sep.exterior_attractor = attractors[0];
    sep.interior_attractor = attractors[1];
  }
  return sep;
}

Separatrix unstable_manifold(const SystemSpec& sys, const FixedPoint& saddle, const Box& box,
                             std::span<const StateVec> attractors, const ManifoldOptions& opt) {
  if (saddle.kind != FixedPointKind::Saddle) throw std::invalid_argument("unstable_manifold needs a saddle");
  const Vec2 vu = saddle.eigenvectors[1];  // positive eigenvalue
  TraceStop why{};
  auto a = trace_branch(sys, saddle.location + opt.offset * vu, 1.0, box, attractors, opt, &why);
  auto b = trace_branch(sys, saddle.location - opt.offset * vu, 1.0, box, attractors, opt, &why);
  Separatrix sep = join_branches(std::move(a), saddle.location, std::move(b), opt.max_spacing);
  sep.drift = sys.drift;
  if (attractors.size() >= 2) {
    sep.exterior_attractor = attractors[0];
    sep.interior_attractor = attractors[1];
  }
  return sep;
}

Separatrix basin_separatrix(const SystemSpec& sys, const Box& box) {
  const auto bs = bistable_structure(sys.params);
  if (!bs) throw std::runtime_error("system is not bistable; no separatrix to trace");
  const std::vector<StateVec> attractors{bs->bare.location, bs->vegetated.location};
  return stable_manifold(sys, bs->saddle, box, attractors);
}

std::optional<std::size_t> flow_to_attractor(const std::function<Vec2(const StateVec&)>& drift,
                                             const StateVec& x, std::span<const StateVec> attractors,
                                             double radius, double max_time) {
  ode::AdaptiveOptions ao;
  ao.rel_tol = 1e-8;
  ao.h_max = 0.1;
  Vec2 y = x;
  double h = 1e-2;
  double t = 0.0;
  while (t < max_time) {
    for (std::size_t i = 0; i < attractors.size(); ++i) {
      if ((y - attractors[i]).norm() <= radius) return i;
    }
    try {
      t += ode::rk4_adaptive_step(drift, y, h, ao);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!y.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

BasinSide basin_side(const StateVec& x, const Separatrix& sep) {
  if (sep.distance(x) <= 1e-6) {
    if (sep.drift) {
      const std::array<StateVec, 2> att{sep.interior_attractor, sep.exterior_attractor};
      const auto hit = flow_to_attractor(sep.drift, x, att);
      if (hit) return *hit == 0 ? BasinSide::Interior : BasinSide::Exterior;
    }
  }
  return sep.crossings(x, sep.interior_attractor) % 2 == 0 ? BasinSide::Interior : BasinSide::Exterior;
}

}  // namespace qpot
