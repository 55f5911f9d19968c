#include "qpot/paths.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace qpot {

Path mpp_reverse(const QuasipotentialModel& m, const StateVec& end, const ReverseOptions& opt) {
  const SystemSpec& sys = m.system();
  const NoiseParams& noise = m.noise();
  const StateVec ref = m.reference();
  const double h = opt.step;

  // Field of the reversed fluctuation flow and the action density at x.
  const auto field = [&](const StateVec& x, double* density) {
    const Vec2 g = m.gradV(x);
    const Mat2 a = sys.diffusion(x, noise);
    if (density) *density = 0.5 * g.dot(a * g);
    return Vec2(-(sys.drift(x) + a * g));
  };

  Vec2 toward = ref - end;
  const double dist = toward.norm();
  StateVec x = dist > 0.0 ? StateVec(end + opt.start_offset * toward / dist) : end;

  std::vector<StateVec> xs{x};
  std::vector<double> dens;
  double closest = (x - ref).norm();
  bool reached = closest <= opt.stop_radius;
  for (std::int64_t k = 0; k < opt.max_steps && !reached; ++k) {
    double d0 = 0.0;
    const Vec2 k1 = field(x, &d0);
    if (k1.norm() < opt.stall_speed && (x - ref).norm() <= opt.capture_radius) {
      reached = true;
      break;
    }
    dens.push_back(d0);
    const Vec2 k2 = field(x + 0.5 * h * k1, nullptr);
    const Vec2 k3 = field(x + 0.5 * h * k2, nullptr);
    const Vec2 k4 = field(x + h * k3, nullptr);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw PathError("reverse integration produced a non-finite state", closest);
    xs.push_back(x);
    const double d = (x - ref).norm();
    closest = std::min(closest, d);
    reached = d <= opt.stop_radius;
  }
  if (!reached) {
    throw PathError("reverse integration did not reach the reference within " + std::to_string(opt.max_steps) +
                        " steps",
                    closest);
  }
  double dlast = 0.0;
  field(x, &dlast);
  dens.push_back(dlast);

  std::reverse(xs.begin(), xs.end());
  std::reverse(dens.begin(), dens.end());
  Path path;
  path.source = PathSource::Learned;
  path.x = std::move(xs);
  path.t.resize(path.x.size());
  path.action.resize(path.x.size());
  path.action[0] = 0.0;
  for (std::size_t i = 0; i < path.x.size(); ++i) {
    path.t[i] = static_cast<double>(i) * h;
    if (i > 0) path.action[i] = path.action[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
  }
  return path;
}

// Characteristics ----------------------------------------------------------

namespace {

// The integrator state carries the displacement from the launch origin
// rather than the position, in extended precision, so the launch direction
// survives the amplification on the way to a saddle.
using Wide = long double;
using WideState = Eigen::Matrix<Wide, 5, 1>;  // dx1, dx2, p1, p2, action
using State5 = Eigen::Matrix<double, 5, 1>;   // x1, x2, p1, p2, action

WideState char_rhs(const SystemSpec& sys, const NoiseParams& noise, const StateVec& origin, const WideState& y) {
  WidePhase z;
  z << Wide(origin(0)) + y(0), Wide(origin(1)) + y(1), y(2), y(3);
  const WidePhase f = sys.characteristic(z, noise);
  const StateVec x(static_cast<double>(z(0)), static_cast<double>(z(1)));
  const Vec2 p(static_cast<double>(y(2)), static_cast<double>(y(3)));
  WideState d;
  d.head<4>() = f;
  d(4) = 0.5 * p.dot(sys.diffusion(x, noise) * p);
  return d;
}

WideState char_step(const SystemSpec& sys, const NoiseParams& noise, const StateVec& origin, const WideState& y,
                    Wide h) {
  const WideState k1 = char_rhs(sys, noise, origin, y);
  const WideState k2 = char_rhs(sys, noise, origin, y + h / 2 * k1);
  const WideState k3 = char_rhs(sys, noise, origin, y + h / 2 * k2);
  const WideState k4 = char_rhs(sys, noise, origin, y + h * k3);
  return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Launch angle as anchor + offset. Refinement happens in the offset, which
/// resolves far below the spacing of doubles near the anchor itself.
struct Angle {
  double anchor = 0.0;
  double offset = 0.0;

  double value() const { return anchor + offset; }
  Eigen::Matrix<Wide, 2, 1> direction() const {
    const Wide c = std::cos(Wide(anchor)), s = std::sin(Wide(anchor));
    const Wide co = std::cos(Wide(offset)), so = std::sin(Wide(offset));
    return {c * co - s * so, s * co + c * so};
  }
  /// Same angle expressed relative to another anchor.
  Angle rebased(double to) const { return {to, (anchor - to) + offset}; }
};

WideState launch_state(const Mat2& launch, const Angle& theta, double r) {
  const Eigen::Matrix<Wide, 2, 1> dx = Wide(r) * theta.direction();
  const Eigen::Matrix<Wide, 2, 2> pm = launch.cast<Wide>();
  WideState y;
  y.head<2>() = dx;
  y.segment<2>(2) = pm * dx;
  y(4) = dx.dot(pm * dx) / 2;  // quadratic approximation of V at launch
  return y;
}

/// Integrates the characteristic launched from `origin` at `theta` and calls
/// visit(t, y) with absolute positions after every step until it returns
/// false, the state leaves the box or turns non-finite, or t_end passes.
/// Returns the last visited state.
template <class Visit>
WideState integrate(const SystemSpec& sys, const NoiseParams& noise, const StateVec& origin, const Mat2& launch,
                    const Angle& theta, const ShootingOptions& opt, double t_end, Visit&& visit) {
  WideState y = launch_state(launch, theta, opt.launch_radius);
  const auto absolute = [&](const WideState& z) {
    State5 w = z.cast<double>();
    w.head<2>() += origin;
    return w;
  };
  const auto steps = static_cast<std::int64_t>(std::ceil(t_end / opt.step - 1e-9));
  if (!visit(0.0, absolute(y))) return y;
  for (std::int64_t k = 1; k <= steps; ++k) {
    const WideState next = char_step(sys, noise, origin, y, Wide(opt.step));
    const State5 w = absolute(next);
    if (!w.allFinite() || !opt.work_box.contains(w.head<2>())) return y;
    y = next;
    if (!visit(static_cast<double>(k) * opt.step, w)) return y;
  }
  return y;
}

constexpr int kBisections = 120;

double cross2(const Vec2& u, const Vec2& v) { return u(0) * v(1) - u(1) * v(0); }

struct Miss {
  double distance = std::numeric_limits<double>::infinity();
  double sign = 0.0;
  double time = 0.0;
};

Miss miss_for(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable, const Mat2& launch,
              const Angle& theta, const StateVec& target, const ShootingOptions& opt) {
  Miss best;
  integrate(sys, noise, stable, launch, theta, opt, opt.max_time,
            [&](double t, const State5& y) {
              const StateVec x = y.head<2>();
              const double d = (x - target).norm();
              if (d < best.distance) {
                const Vec2 v = sys.drift(x) + sys.diffusion(x, noise) * y.segment<2>(2);
                best = {d, cross2(v, target - x) >= 0.0 ? 1.0 : -1.0, t};
              }
              // Past the closest approach and clearly moving off.
              return d <= best.distance + 0.3;
            });
  return best;
}

/// Launch angles: a uniform ring plus log-spaced offsets around both senses
/// of the slow unstable direction, where the relevant characteristics leave.
std::vector<Angle> launch_angles(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable,
                                  const Mat2& launch) {
  const Mat2 lin = sys.jacobian(stable) + sys.diffusion(stable, noise) * launch;
  Eigen::EigenSolver<Mat2> es(lin);
  int slow = std::abs(es.eigenvalues()(0)) <= std::abs(es.eigenvalues()(1)) ? 0 : 1;
  const Vec2 v = es.eigenvectors().col(slow).real();
  const double base = std::atan2(v(1), v(0));
  std::vector<Angle> th;
  constexpr int kRing = 720;
  for (int i = 0; i < kRing; ++i) th.push_back({std::remainder(2.0 * std::numbers::pi * i / kRing, 2.0 * std::numbers::pi), 0.0});
  for (double b : {base, base + std::numbers::pi}) {
    const double anchor = std::remainder(b, 2.0 * std::numbers::pi);
    th.push_back({anchor, 0.0});
    for (int k = 4; k <= 52; ++k) {
      const double off = std::pow(10.0, -0.25 * k);
      th.push_back({anchor, off});
      th.push_back({anchor, -off});
    }
  }
  std::sort(th.begin(), th.end(), [](const Angle& a, const Angle& b) { return a.value() < b.value(); });
  th.erase(std::unique(th.begin(), th.end(), [](const Angle& a, const Angle& b) { return a.value() == b.value(); }),
           th.end());
  return th;
}

Path record_characteristic(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable,
                           const Mat2& launch, const Angle& theta, const ShootingOptions& opt, double t_end,
                           WideState* last = nullptr) {
  Path path;
  path.source = PathSource::Shooting;
  const WideState y = integrate(sys, noise, stable, launch, theta, opt, t_end, [&](double t, const State5& w) {
    path.t.push_back(t);
    path.x.push_back(w.head<2>());
    path.p.push_back(w.segment<2>(2));
    path.action.push_back(w(4));
    return true;
  });
  if (last) *last = y;
  return path;
}

}  // namespace

Mat2 launch_map(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable) {
  const Mat2 j = sys.jacobian(stable);
  Eigen::Matrix4d lin = Eigen::Matrix4d::Zero();
  lin.topLeftCorner<2, 2>() = j;
  lin.topRightCorner<2, 2>() = sys.diffusion(stable, noise);
  lin.bottomRightCorner<2, 2>() = -j.transpose();
  Eigen::EigenSolver<Eigen::Matrix4d> es(lin);
  Eigen::Matrix<double, 4, 2> basis;
  int col = 0;
  for (int i = 0; i < 4 && col < 2; ++i) {
    const auto lam = es.eigenvalues()(i);
    if (lam.real() <= 0.0) continue;
    const auto v = es.eigenvectors().col(i);
    if (lam.imag() == 0.0) {
      basis.col(col++) = v.real();
    } else if (lam.imag() > 0.0) {
      basis.col(col++) = v.real();
      basis.col(col++) = v.imag();
    }
  }
  if (col != 2) throw std::runtime_error("launch point is not a stable node of the drift");
  const Mat2 top = basis.topRows<2>();
  const Mat2 bottom = basis.bottomRows<2>();
  const Mat2 p = bottom * top.inverse();
  return 0.5 * (p + p.transpose());
}

Path characteristic(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable, const Mat2& launch,
                    double theta, const ShootingOptions& opt, double t_end) {
  return record_characteristic(sys, noise, stable, launch, Angle{theta, 0.0}, opt, t_end);
}

Path shooting_mpp(const SystemSpec& sys, const NoiseParams& noise, const StateVec& target, const ShootingOptions& opt) {
  const StateVec stable = sys.reference_point;
  const Mat2 launch = launch_map(sys, noise, stable);
  const auto angles = launch_angles(sys, noise, stable, launch);

  std::vector<Miss> misses;
  misses.reserve(angles.size());
  for (const Angle& th : angles) misses.push_back(miss_for(sys, noise, stable, launch, th, target, opt));

  Angle best_theta = angles[0];
  Miss best = misses[0];
  const auto consider = [&](const Angle& th, const Miss& m) {
    if (m.distance < best.distance || (m.distance == best.distance && th.value() < best_theta.value())) {
      best = m;
      best_theta = th;
    }
  };
  for (std::size_t i = 0; i < angles.size(); ++i) consider(angles[i], misses[i]);

  // Sign flips of the signed miss between neighbouring angles. Near the
  // target a flip separates characteristics passing on either side of it.
  for (std::size_t i = 0; i + 1 < angles.size(); ++i) {
    const Miss& ma = misses[i];
    const Miss& mb = misses[i + 1];
    if (ma.sign == mb.sign) continue;
    const double anchor = angles[i].anchor;
    double lo = angles[i].offset, hi = angles[i + 1].rebased(anchor).offset;
    double s_lo = ma.sign;
    for (int it = 0; it < kBisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const Angle th{anchor, mid};
      const Miss mm = miss_for(sys, noise, stable, launch, th, target, opt);
      consider(th, mm);
      if (mm.sign == s_lo) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  if (best.distance > opt.tolerance) {
    throw PathError("shooting did not come within tolerance of the target", best.distance);
  }
  // Up to the sample before the closest approach, then substeps onto it.
  WideState y;
  Path path = record_characteristic(sys, noise, stable, launch, best_theta, opt,
                                    std::max(0.0, best.time - opt.step), &y);
  constexpr int kSubsteps = 64;
  const Wide h = Wide(opt.step) / kSubsteps;
  for (int k = 0; k < 2 * kSubsteps; ++k) {
    const WideState next = char_step(sys, noise, stable, y, h);
    const StateVec x = stable + next.head<2>().cast<double>();
    if ((x - target).norm() >= (path.x.back() - target).norm()) break;
    y = next;
    path.t.push_back(path.t.back() + static_cast<double>(h));
    path.x.push_back(x);
    path.p.push_back(y.segment<2>(2).cast<double>());
    path.action.push_back(static_cast<double>(y(4)));
  }
  return path;
}

namespace {

struct LineHit {
  bool hit = false;
  double action = std::numeric_limits<double>::infinity();
  StateVec point = StateVec::Zero();
  double time = 0.0;
};

LineHit line_hit(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable, const Mat2& launch,
                 const Angle& theta, double c, const ShootingOptions& opt) {
  const double side = stable(0) > c ? 1.0 : -1.0;
  LineHit out;
  State5 prev;
  double t_prev = 0.0;
  bool first = true;
  integrate(sys, noise, stable, launch, theta, opt, opt.max_time,
            [&](double t, const State5& y) {
              if (!first && side * (y(0) - c) <= 0.0) {
                const double f = (prev(0) - c) / (prev(0) - y(0));
                out.hit = true;
                out.point = prev.head<2>() + f * (y.head<2>() - prev.head<2>());
                out.action = prev(4) + f * (y(4) - prev(4));
                out.time = t_prev + f * (t - t_prev);
                return false;
              }
              first = false;
              prev = y;
              t_prev = t;
              return true;
            });
  return out;
}

}  // namespace

LineShot shooting_line_minimum(const SystemSpec& sys, const NoiseParams& noise, double c, const ShootingOptions& opt) {
  const StateVec stable = sys.reference_point;
  const Mat2 launch = launch_map(sys, noise, stable);
  const auto angles = launch_angles(sys, noise, stable, launch);
  std::vector<double> s(angles.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    s[i] = line_hit(sys, noise, stable, launch, angles[i], c, opt).action;
    if (s[i] < s[best]) best = i;
  }
  if (!std::isfinite(s[best])) throw PathError("no characteristic reaches the line", 0.0);

  // Golden-section search on the bracket around the best sampled angle.
  const double anchor = angles[best].anchor;
  double a = angles[best == 0 ? 0 : best - 1].rebased(anchor).offset;
  double b = angles[std::min(best + 1, angles.size() - 1)].rebased(anchor).offset;
  const auto f = [&](double off) { return line_hit(sys, noise, stable, launch, {anchor, off}, c, opt).action; };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(std::abs(a), std::abs(b)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  Angle theta{anchor, f1 < f2 ? x1 : x2};
  if (std::min(f1, f2) > s[best]) theta = angles[best];

  const LineHit hit = line_hit(sys, noise, stable, launch, theta, c, opt);
  LineShot shot;
  shot.path = record_characteristic(sys, noise, stable, launch, theta, opt, hit.time);
  shot.path.t.push_back(hit.time);
  shot.path.x.push_back(hit.point);
  // Momentum at the hit is not interpolated; repeat the last sample.
  shot.path.p.push_back(shot.path.p.back());
  shot.path.action.push_back(hit.action);
  shot.hit = hit.point;
  shot.action = hit.action;
  return shot;
}

double hamiltonian(const SystemSpec& sys, const NoiseParams& noise, const StateVec& x, const Vec2& p) {
  return sys.drift(x).dot(p) + 0.5 * p.dot(sys.diffusion(x, noise) * p);
}

namespace {

/// Weights of the first derivative at z from values at `nodes` (Fornberg).
template <std::size_t N>
std::array<double, N> derivative_weights(double z, const std::array<double, N>& nodes) {
  std::array<std::array<double, 2>, N> c{};
  c[0][0] = 1.0;
  double c1 = 1.0;
  for (std::size_t i = 1; i < N; ++i) {
    double c2 = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        c[i][1] = c1 * (c[i - 1][0] - (nodes[i - 1] - z) * c[i - 1][1]) / c2;
        c[i][0] = -c1 * (nodes[i - 1] - z) * c[i - 1][0] / c2;
      }
      c[j][1] = ((nodes[i] - z) * c[j][1] - c[j][0]) / c3;
      c[j][0] = (nodes[i] - z) * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::array<double, N> w;
  for (std::size_t i = 0; i < N; ++i) w[i] = c[i][1];
  return w;
}

/// d/dt of samples f at index i from a five-point stencil, shifted inwards
/// at the ends; the stencil tolerates uneven spacing.
template <class T, class F>
T stencil_derivative(const std::vector<double>& t, std::size_t i, F&& f) {
  const std::size_t n = t.size();
  const std::size_t w = std::min<std::size_t>(5, n);
  const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, n - w);
  std::array<double, 5> nodes{};
  for (std::size_t k = 0; k < w; ++k) nodes[k] = t[lo + k];
  for (std::size_t k = w; k < 5; ++k) nodes[k] = nodes[w - 1] + static_cast<double>(k);  // unused padding
  std::array<double, 5> wt{};
  if (w == 5) {
    wt = derivative_weights<5>(t[i], nodes);
  } else {
    const std::array<double, 3> n3{nodes[0], nodes[1], nodes[2]};
    const auto w3 = derivative_weights<3>(t[i], n3);
    std::copy(w3.begin(), w3.end(), wt.begin());
  }
  T d = wt[0] * f(lo);
  for (std::size_t k = 1; k < w; ++k) d += wt[k] * f(lo + k);
  return d;
}

}  // namespace

double fw_action(const Path& path, const SystemSpec& sys, const NoiseParams& noise) {
  const std::size_t n = path.size();
  if (n < 3) return 0.0;
  std::vector<double> dens(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 v = stencil_derivative<Vec2>(path.t, i, [&](std::size_t k) { return path.x[k]; });
    const Vec2 r = v - sys.drift(path.x[i]);
    dens[i] = 0.5 * r.dot(sys.diffusion(path.x[i], noise).ldlt().solve(r));
  }
  // Trapezoid with the cubic Hermite correction on every interval.
  std::vector<double> slope(n);
  for (std::size_t i = 0; i < n; ++i) slope[i] = stencil_derivative<double>(path.t, i, [&](std::size_t k) { return dens[k]; });
  double s = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double h = path.t[i] - path.t[i - 1];
    s += 0.5 * h * (dens[i] + dens[i - 1]) + h * h / 12.0 * (slope[i - 1] - slope[i]);
  }
  return s;
}

namespace {

std::vector<StateVec> resample(const std::vector<StateVec>& xs, std::size_t max_points) {
  if (xs.size() <= max_points) return xs;
  std::vector<double> s(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) s[i] = s[i - 1] + (xs[i] - xs[i - 1]).norm();
  std::vector<StateVec> out;
  out.reserve(max_points);
  std::size_t j = 0;
  for (std::size_t k = 0; k < max_points; ++k) {
    const double target = s.back() * static_cast<double>(k) / static_cast<double>(max_points - 1);
    while (j + 2 < xs.size() && s[j + 1] < target) ++j;
    const double len = s[j + 1] - s[j];
    const double f = len > 0.0 ? std::clamp((target - s[j]) / len, 0.0, 1.0) : 0.0;
    out.push_back(xs[j] + f * (xs[j + 1] - xs[j]));
  }
  return out;
}

double point_polyline(const StateVec& x, const std::vector<StateVec>& poly) {
  if (poly.size() == 1) return (x - poly[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const Vec2 d = poly[i + 1] - poly[i];
    const double len2 = d.squaredNorm();
    const double f = len2 > 0.0 ? std::clamp((x - poly[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (x - poly[i] - f * d).squaredNorm());
  }
  return std::sqrt(best);
}

double directed(const std::vector<StateVec>& from, const std::vector<StateVec>& to) {
  double worst = 0.0;
  for (const auto& x : from) worst = std::max(worst, point_polyline(x, to));
  return worst;
}

}  // namespace

double path_distance(const Path& a, const Path& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("path_distance needs nonempty paths");
  const auto ra = resample(a.x, 3000);
  const auto rb = resample(b.x, 3000);
  return std::max(directed(ra, rb), directed(rb, ra));
}

DipResult moisture_dip_check(const Path& path) {
  if (path.empty()) throw std::invalid_argument("moisture_dip_check needs a nonempty path");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path.x[i](1) < path.x[arg](1)) arg = i;
  }
  const double lo = path.x[arg](1);
  const bool interior = arg > 0 && arg + 1 < path.size();
  return {arg, path.x[arg], interior && lo < path.x.front()(1) && lo < path.x.back()(1)};
}

std::optional<double> x2_at(const Path& path, double x1) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double a = path.x[i](0) - x1;
    const double b = path.x[i + 1](0) - x1;
    if ((a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0)) {
      const double f = a == b ? 0.0 : a / (a - b);
      return path.x[i](1) + f * (path.x[i + 1](1) - path.x[i](1));
    }
  }
  return std::nullopt;
}

void write_path_csv(const std::string& file, const Path& path, const std::string& header) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out.precision(12);
  const bool mom = !path.p.empty();
  out << header << (mom ? "t,x1,x2,p1,p2,cumulative_action\n" : "t,x1,x2,cumulative_action\n");
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << path.t[i] << ',' << path.x[i](0) << ',' << path.x[i](1) << ',';
    if (mom) out << path.p[i](0) << ',' << path.p[i](1) << ',';
    out << path.action[i] << '\n';
  }
}

}  // namespace qpot
