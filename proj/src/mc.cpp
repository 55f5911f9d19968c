#include "qpot/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace qpot {

void McConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("mc dt must be positive");
  if (max_steps <= 0) throw std::invalid_argument("mc max_steps must be positive");
  if (trajectories <= 0) throw std::invalid_argument("mc trajectory count must be positive");
}

ExitSpec ExitSpec::line(double c) {
  ExitSpec s;
  s.kind_ = Kind::Line;
  s.c_ = c;
  return s;
}

namespace {

double cross2(const Vec2& u, const Vec2& v) { return u(0) * v(1) - u(1) * v(0); }

bool segments_intersect(const StateVec& a, const StateVec& b, const StateVec& p, const StateVec& q) {
  const Vec2 r = b - a;
  const Vec2 s = q - p;
  const double den = cross2(r, s);
  if (den == 0.0) return false;
  const double t = cross2(p - a, s) / den;
  const double u = cross2(p - a, r) / den;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace

ExitSpec ExitSpec::separatrix(const Separatrix& sep, const StateVec& bare_state, double capture_radius) {
  if (sep.points().size() < 2) throw std::invalid_argument("separatrix polyline needs at least two points");
  ExitSpec s;
  s.kind_ = Kind::Separatrix;
  s.poly_ = sep.points();
  s.bare_ = bare_state;
  s.capture_r2_ = capture_radius * capture_radius;

  double x0 = s.poly_[0](0), x1 = x0, y0 = s.poly_[0](1), y1 = y0;
  for (const auto& p : s.poly_) {
    x0 = std::min(x0, p(0));
    x1 = std::max(x1, p(0));
    y0 = std::min(y0, p(1));
    y1 = std::max(y1, p(1));
  }
  s.gx0_ = x0 - 2.0 * s.cell_;
  s.gy0_ = y0 - 2.0 * s.cell_;
  s.nx_ = static_cast<int>(std::ceil((x1 - x0) / s.cell_)) + 5;
  s.ny_ = static_cast<int>(std::ceil((y1 - y0) / s.cell_)) + 5;
  s.cells_.assign(static_cast<std::size_t>(s.nx_) * s.ny_, {});
  for (std::size_t k = 0; k + 1 < s.poly_.size(); ++k) {
    const auto& a = s.poly_[k];
    const auto& b = s.poly_[k + 1];
    const int i0 = std::max(0, static_cast<int>(std::floor((std::min(a(0), b(0)) - s.gx0_) / s.cell_)) - 1);
    const int i1 = std::min(s.nx_ - 1, static_cast<int>(std::floor((std::max(a(0), b(0)) - s.gx0_) / s.cell_)) + 1);
    const int j0 = std::max(0, static_cast<int>(std::floor((std::min(a(1), b(1)) - s.gy0_) / s.cell_)) - 1);
    const int j1 = std::min(s.ny_ - 1, static_cast<int>(std::floor((std::max(a(1), b(1)) - s.gy0_) / s.cell_)) + 1);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) s.cells_[static_cast<std::size_t>(i) * s.ny_ + j].push_back(static_cast<std::uint32_t>(k));
    }
  }
  return s;
}

bool ExitSpec::crosses(const StateVec& a, const StateVec& b) const {
  const bool short_step = (b - a).cwiseAbs().maxCoeff() < cell_;
  if (short_step) {
    const int i = static_cast<int>(std::floor((a(0) - gx0_) / cell_));
    const int j = static_cast<int>(std::floor((a(1) - gy0_) / cell_));
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return false;
    for (std::uint32_t k : cells_[static_cast<std::size_t>(i) * ny_ + j]) {
      if (segments_intersect(a, b, poly_[k], poly_[k + 1])) return true;
    }
    return false;
  }
  for (std::size_t k = 0; k + 1 < poly_.size(); ++k) {
    if (segments_intersect(a, b, poly_[k], poly_[k + 1])) return true;
  }
  return false;
}

ExitSpec::Trigger ExitSpec::test(const StateVec& a, const StateVec& b) const {
  if (kind_ == Kind::Line) return b(0) <= c_ ? Trigger::Crossing : Trigger::None;
  if (crosses(a, b)) return Trigger::Crossing;
  if ((b - bare_).squaredNorm() <= capture_r2_) return Trigger::Capture;
  return Trigger::None;
}

StateVec em_step(const StateVec& x, double dt, const SystemSpec& sys, const NoiseParams& noise, const Vec2& z) {
  if (!(dt > 0.0)) throw std::invalid_argument("em_step needs dt > 0");
  return x + sys.drift(x) * dt + sys.noise_factor(x, noise) * z * std::sqrt(noise.eps * dt);
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer applied to the master seed, then mixed with the index.
  const auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ index);
}

ExitOutcome first_exit(const StateVec& x0, const ExitSpec& spec, const SystemSpec& sys, const NoiseParams& noise,
                       const McConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  StateVec x = x0;
  ExitOutcome out;
  for (std::int64_t k = 1; k <= cfg.max_steps; ++k) {
    const Vec2 z(normal(rng), normal(rng));
    const StateVec next = em_step(x, cfg.dt, sys, noise, z);
    if (!next.allFinite()) throw std::runtime_error("non-finite state in Euler-Maruyama trajectory");
    const auto trig = spec.test(x, next);
    if (trig != ExitSpec::Trigger::None) {
      out.time = static_cast<double>(k) * cfg.dt;
      out.steps = k;
      out.trigger = trig;
      return out;
    }
    x = next;
  }
  out.steps = cfg.max_steps;
  return out;
}

McResult exit_ensemble(const StateVec& x0, const ExitSpec& spec, const SystemSpec& sys, const NoiseParams& noise,
                       const McConfig& cfg) {
  cfg.validate();
  const int n = cfg.trajectories;
  McResult r;
  r.times.resize(n);
  r.seeds.resize(n);
  r.triggers.resize(n, ExitSpec::Trigger::None);
  std::vector<std::int64_t> steps(n, 0);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    r.seeds[i] = trajectory_seed(cfg.seed, static_cast<std::uint64_t>(i));
    try {
      const ExitOutcome o = first_exit(x0, spec, sys, noise, cfg, r.seeds[i]);
      r.times[i] = o.time;
      r.triggers[i] = o.trigger;
      steps[i] = o.steps;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw std::runtime_error("trajectory " + std::to_string(i) + ": " + errors[i]);
  }

  // Kahan sums in index order keep the aggregate independent of scheduling.
  double sum = 0.0, comp = 0.0;
  const auto kahan = [](double& s, double& c, double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  };
  int m = 0;
  for (int i = 0; i < n; ++i) {
    r.total_steps += steps[i];
    if (!r.times[i]) {
      ++r.censored;
      continue;
    }
    ++m;
    kahan(sum, comp, *r.times[i]);
  }
  if (m == 0) throw std::runtime_error("every trajectory was censored");
  r.mean = sum / m;
  // Standard error of the mean, mapped to the log scale by the delta method.
  double ss = 0.0, sc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (r.times[i]) kahan(ss, sc, (*r.times[i] - r.mean) * (*r.times[i] - r.mean));
  }
  const double se = m > 1 ? std::sqrt(ss / (m - 1) / m) : 0.0;
  const double log_se = se / r.mean;
  r.ci_low = r.mean * std::exp(-1.96 * log_se);
  r.ci_high = r.mean * std::exp(1.96 * log_se);
  return r;
}

void write_exit_times_csv(const std::string& path, const McResult& r, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << header << "index,seed,exit_time\n";
  out.precision(10);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    out << i << ',' << r.seeds[i] << ',';
    if (r.times[i]) {
      out << *r.times[i];
    } else {
      out << "CENSORED";
    }
    out << '\n';
  }
}

}  // namespace qpot
