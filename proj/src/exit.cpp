#include "qpot/exit.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qpot {

double f_integral(const Path& path, const QuasipotentialModel& m, std::span<const StateVec> fixed_points,
                  double cutoff) {
  const auto kept = [&](const StateVec& x) {
    for (const auto& fp : fixed_points) {
      if ((x - fp).norm() < cutoff) return false;
    }
    return true;
  };
  double sum = 0.0;
  double prev_t = 0.0, prev_f = 0.0;
  bool have_prev = false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!kept(path.x[i])) {
      have_prev = false;
      continue;
    }
    const double f = m.F(path.x[i]);
    if (!std::isfinite(f)) throw std::runtime_error("non-finite F along the path");
    if (have_prev) sum += 0.5 * (path.t[i] - prev_t) * (f + prev_f);
    prev_t = path.t[i];
    prev_f = f;
    have_prev = true;
  }
  return sum;
}

void ExitAsymptotics::validate() const {
  if (!(barrier > 0.0)) throw std::invalid_argument("exit barrier must be positive");
  if (!std::isfinite(f_integral)) throw std::invalid_argument("F integral is not finite");
  if (kind == ExitCase::A) {
    if (!(mu_star > 0.0)) throw std::invalid_argument("mu* must be positive");
    if (!(det_h_star > 0.0)) throw std::invalid_argument("det h* must be positive");
  } else {
    if (!(lambda_star > 0.0)) throw std::invalid_argument("lambda* must be positive");
    if (!(det_H_star < 0.0)) throw std::invalid_argument("det H* must be negative at a saddle");
    if (!(det_H_bar > 0.0)) throw std::invalid_argument("det H_bar must be positive");
  }
}

double ExitAsymptotics::prefactor(double eps) const {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  validate();
  if (kind == ExitCase::A) {
    return std::sqrt(det_h_star / (2.0 * std::numbers::pi * eps)) / mu_star * std::exp(f_integral);
  }
  return std::numbers::pi / lambda_star * std::sqrt(std::abs(det_H_star) / det_H_bar) * std::exp(f_integral);
}

double ExitAsymptotics::mfpt(double eps) const { return prefactor(eps) * std::exp(barrier / eps); }

double mfpt_case_a(double eps, const ExitAsymptotics& a) {
  if (a.kind != ExitCase::A) throw std::invalid_argument("case A formula needs case A ingredients");
  return a.mfpt(eps);
}

double mfpt_case_b(double eps, const ExitAsymptotics& a) {
  if (a.kind != ExitCase::B) throw std::invalid_argument("case B formula needs case B ingredients");
  return a.mfpt(eps);
}

double unstable_eigenvalue(const SystemSpec& sys, const StateVec& saddle) {
  Eigen::EigenSolver<Mat2> es(sys.jacobian(saddle), false);
  return es.eigenvalues().real().maxCoeff();
}

ExitAsymptotics case_a_asymptotics(const QuasipotentialModel& m, double c, const Box& search, Path* path_out) {
  const LineArgmin argmin = boundary_argmin_line(m, c, search.x2_min, search.x2_max);
  if (argmin.at_endpoint) throw std::runtime_error("boundary minimum of V sits at the end of the search range");
  ExitAsymptotics a;
  a.kind = ExitCase::A;
  a.exit_point = argmin.point;
  a.barrier = m.V(argmin.point);
  a.mu_star = mu_star(m, argmin.point);
  a.det_h_star = det_h_star(m, argmin.point);
  const Path path = mpp_reverse(m, argmin.point);
  // The path starts at the learned equilibrium next to the reference.
  const StateVec fixed[] = {m.reference(), path.x.front()};
  a.f_integral = f_integral(path, m, fixed);
  a.validate();
  if (path_out) *path_out = path;
  return a;
}

ExitAsymptotics case_b_asymptotics(const QuasipotentialModel& m, const FixedPoint& saddle, Path* path_out) {
  const SystemSpec& sys = m.system();
  ExitAsymptotics a;
  a.kind = ExitCase::B;
  a.exit_point = saddle.location;
  a.barrier = m.V(saddle.location);
  a.lambda_star = unstable_eigenvalue(sys, saddle.location);
  a.det_H_star = hessian_riccati(sys, m.noise(), saddle.location).determinant();
  a.det_H_bar = hessian_riccati(sys, m.noise(), m.reference()).determinant();
  const Path path = mpp_reverse(m, saddle.location);
  const StateVec fixed[] = {m.reference(), path.x.front(), saddle.location};
  a.f_integral = f_integral(path, m, fixed);
  a.validate();
  if (path_out) *path_out = path;
  return a;
}

double barrier_from_times(ExitCase kind, std::span<const double> eps, std::span<const double> mean_times) {
  if (eps.size() != mean_times.size() || eps.size() < 2) {
    throw std::invalid_argument("barrier regression needs at least two (eps, time) pairs");
  }
  const std::size_t n = eps.size();
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eps[i] > 0.0) || !(mean_times[i] > 0.0)) throw std::invalid_argument("eps and times must be positive");
    xs[i] = 1.0 / eps[i];
    ys[i] = std::log(mean_times[i]) + (kind == ExitCase::A ? 0.5 * std::log(eps[i]) : 0.0);
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("barrier regression needs distinct eps values");
  return sxy / sxx;
}

std::vector<MfptRow> mfpt_curve(const ExitAsymptotics& a, std::span<const double> eps_grid) {
  std::vector<MfptRow> rows;
  rows.reserve(eps_grid.size());
  for (double eps : eps_grid) rows.push_back({eps, a.mfpt(eps), std::nullopt, std::nullopt, std::nullopt});
  return rows;
}

void write_mfpt_csv(const std::string& file, const std::vector<MfptRow>& rows, const std::string& header) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out.precision(12);
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  bool mc = false;
  for (const auto& r : rows) mc = mc || r.mc_mean.has_value();
  out << header << "eps,mfpt_asymptotic";
  if (mc) out << ",mfpt_mc_mean,mfpt_mc_ci_low,mfpt_mc_ci_high,mc_over_asymptotic";
  out << '\n';
  for (const auto& r : rows) {
    out << r.eps << ',' << r.asymptotic;
    if (mc) {
      if (r.mc_mean) {
        out << ',' << *r.mc_mean << ',' << r.mc_ci_low.value_or(kNaN) << ',' << r.mc_ci_high.value_or(kNaN) << ','
            << *r.mc_mean / r.asymptotic;
      } else {
        out << ",,,,";
      }
    }
    out << '\n';
  }
}

}  // namespace qpot
