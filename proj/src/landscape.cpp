#include "qpot/landscape.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpot {

QuasipotentialModel::QuasipotentialModel(nn::NetParams params, StateVec reference, SystemSpec system,
                                         NoiseParams noise)
    : params_(std::move(params)), reference_(std::move(reference)), system_(std::move(system)), noise_(noise) {}

QuasipotentialModel::Point QuasipotentialModel::eval(const StateVec& x) const {
  const nn::NetJet j = nn::forward_with_input_grad(params_, x);
  const Vec2 dx = x - reference_;
  return {j.v + dx.squaredNorm(), j.grad_v + 2.0 * dx, j.l, j.jac_l};
}

double QuasipotentialModel::V(const StateVec& x) const { return eval(x).V; }
Vec2 QuasipotentialModel::gradV(const StateVec& x) const { return eval(x).gradV; }
Vec2 QuasipotentialModel::l(const StateVec& x) const { return eval(x).l; }
double QuasipotentialModel::div_l(const StateVec& x) const { return eval(x).jac_l.trace(); }

Mat2 QuasipotentialModel::hessV(const StateVec& x) const {
  constexpr double h = 1e-4;
  const Mat2 coarse = nn::input_hessian(params_, x, h);
  const Mat2 fine = nn::input_hessian(params_, x, 0.5 * h);
  const double scale = std::max(fine.cwiseAbs().maxCoeff(), 1e-12);
  Mat2 hv = coarse;
  if ((fine - coarse).cwiseAbs().maxCoeff() > 0.05 * scale) {
    hv = (4.0 * fine - coarse) / 3.0;
  }
  return hv + 2.0 * Mat2::Identity();
}

double QuasipotentialModel::decomposition_residual(const StateVec& x) const {
  const Point p = eval(x);
  const Mat2 a = system_.diffusion(x, noise_);
  return (system_.drift(x) + 0.5 * a * p.gradV - p.l).norm();
}

double QuasipotentialModel::F(const StateVec& x) const {
  const Point p = eval(x);
  return p.jac_l.trace() + 0.5 * system_.divergence(x, noise_).dot(p.gradV);
}

Vec2 QuasipotentialModel::fluctuation_field(const StateVec& x) const {
  return system_.drift(x) + system_.diffusion(x, noise_) * gradV(x);
}

Mat2 hessian_riccati(const SystemSpec& sys, const NoiseParams& noise, const StateVec& fixed_point) {
  const Mat2 q = -sys.jacobian(fixed_point);
  const Mat2 a = sys.diffusion(fixed_point, noise);
  // Unknown M = [[m0, m1], [m1, m2]]; entries (0,0), (0,1), (1,1) of M Q^T + Q M.
  Eigen::Matrix3d lhs;
  for (int k = 0; k < 3; ++k) {
    Mat2 basis = Mat2::Zero();
    if (k == 0) basis(0, 0) = 1.0;
    if (k == 1) basis(0, 1) = basis(1, 0) = 1.0;
    if (k == 2) basis(1, 1) = 1.0;
    const Mat2 img = basis * q.transpose() + q * basis;
    lhs.col(k) << img(0, 0), img(0, 1), img(1, 1);
  }
  const Eigen::Vector3d rhs(a(0, 0), a(0, 1), a(1, 1));
  Eigen::FullPivLU<Eigen::Matrix3d> lu(lhs);
  if (!lu.isInvertible()) throw std::runtime_error("Lyapunov system is singular (resonant Jacobian eigenvalues)");
  const Eigen::Vector3d m = lu.solve(rhs);
  Mat2 mm;
  mm << m(0), m(1), m(1), m(2);
  Eigen::FullPivLU<Mat2> inv(mm);
  if (!inv.isInvertible()) throw std::runtime_error("Lyapunov solution is singular; Hessian undefined");
  const Mat2 h = inv.inverse();
  return 0.5 * (h + h.transpose());
}

LineArgmin boundary_argmin_line(const QuasipotentialModel& m, double c, double x2_lo, double x2_hi) {
  if (!(x2_hi > x2_lo)) throw std::invalid_argument("boundary_argmin_line: empty x2 range");
  const auto v = [&](double x2) { return m.V(StateVec(c, x2)); };

  constexpr int kScan = 200;
  int best = 0;
  double best_v = v(x2_lo);
  for (int i = 1; i <= kScan; ++i) {
    const double val = v(x2_lo + (x2_hi - x2_lo) * i / kScan);
    if (val < best_v) {
      best_v = val;
      best = i;
    }
  }
  const double cell = (x2_hi - x2_lo) / kScan;
  double a = std::max(x2_lo, x2_lo + (best - 1) * cell);
  double b = std::min(x2_hi, x2_lo + (best + 1) * cell);

  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1g = b - g * (b - a);
  double x2g = a + g * (b - a);
  double f1 = v(x1g);
  double f2 = v(x2g);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2g;
      x2g = x1g;
      f2 = f1;
      x1g = b - g * (b - a);
      f1 = v(x1g);
    } else {
      a = x1g;
      x1g = x2g;
      f1 = f2;
      x2g = a + g * (b - a);
      f2 = v(x2g);
    }
  }
  double x2 = 0.5 * (a + b);

  // Newton on dV/dx2 with the exact gradient and the difference Hessian.
  for (int it = 0; it < 8; ++it) {
    const StateVec x(c, x2);
    const double g2 = m.gradV(x)(1);
    const double h22 = m.hessV(x)(1, 1);
    if (!(h22 > 0.0)) break;
    const double nx = std::clamp(x2 - g2 / h22, x2_lo, x2_hi);
    if (std::abs(nx - x2) < 1e-14) break;
    if (m.V(StateVec(c, nx)) > m.V(x) + 1e-14) break;
    x2 = nx;
  }
  const bool edge = (x2 - x2_lo) < 2.0 * cell * 1e-3 || (x2_hi - x2) < 2.0 * cell * 1e-3;
  return {StateVec(c, x2), v(x2), edge};
}

Vec2 line_exterior_normal(const QuasipotentialModel& m, double c) {
  return m.reference()(0) > c ? Vec2(-1.0, 0.0) : Vec2(1.0, 0.0);
}

double mu_star(const QuasipotentialModel& m, const StateVec& xstar) {
  const auto p = m.eval(xstar);
  const Mat2 a = m.system().diffusion(xstar, m.noise());
  return (0.5 * a * p.gradV + p.l).dot(line_exterior_normal(m, xstar(0)));
}

double det_h_star(const QuasipotentialModel& m, const StateVec& xstar) {
  // Tangent space of a vertical line is spanned by e2.
  return m.hessV(xstar)(1, 1);
}

std::vector<GridRow> evaluate_grid(const QuasipotentialModel& m, const Box& box, int n1, int n2) {
  if (n1 < 2 || n2 < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
  std::vector<GridRow> rows;
  rows.reserve(static_cast<std::size_t>(n1) * n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      const StateVec x(box.x1_min + (box.x1_max - box.x1_min) * i / (n1 - 1),
                       box.x2_min + (box.x2_max - box.x2_min) * j / (n2 - 1));
      const auto p = m.eval(x);
      const double f = p.jac_l.trace() + 0.5 * m.system().divergence(x, m.noise()).dot(p.gradV);
      rows.push_back({x(0), x(1), p.V, p.l(0), p.l(1), f});
    }
  }
  return rows;
}

}  // namespace qpot
