#include "qpot/model.hpp"

#include <cmath>

namespace qpot {

void SystemParams::validate() const {
  for (double v : {rho, K, beta, x0, alpha, lambda, R}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("system parameters must be finite and strictly positive");
    }
  }
}

void NoiseParams::validate() const {
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) {
    throw std::invalid_argument("noise amplitudes must be nonnegative");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("noise intensity eps must be positive");
  }
}

NoiseParams noise_case(std::string_view name) {
  if (name == "i") return {0.1, 1.0, 0.05};
  if (name == "ii") return {0.08, 1.0, 0.05};
  if (name == "iii") return {0.1, 0.8, 0.05};
  throw std::invalid_argument("unknown noise case '" + std::string(name) + "' (expected i, ii or iii)");
}

namespace {

void check_domain(const StateVec& x, const SystemParams& p) {
  if (!(x(0) > -p.x0)) {
    throw DomainError("state x1 <= -x0 is outside the vegetation model domain");
  }
}

}  // namespace

Vec2 drift(const StateVec& x, const SystemParams& p) {
  check_domain(x, p);
  const double x1 = x(0);
  const double x2 = x(1);
  return {p.rho * x1 * (x2 - x1 / p.K) - p.beta * x1 / (x1 + p.x0),
          p.R - p.alpha * x2 - p.lambda * x1 * x2};
}

Mat2 drift_jacobian(const StateVec& x, const SystemParams& p) {
  check_domain(x, p);
  const double x1 = x(0);
  const double x2 = x(1);
  const double s = x1 + p.x0;
  Mat2 j;
  j << p.rho * (x2 - 2.0 * x1 / p.K) - p.beta * p.x0 / (s * s), p.rho * x1,
      -p.lambda * x2, -p.alpha - p.lambda * x1;
  return j;
}

Mat2 diffusion_a(const StateVec& x, const NoiseParams& n) {
  const double x1sq = x(0) * x(0);
  Mat2 a = Mat2::Zero();
  a(0, 0) = n.sigma1 * n.sigma1 * x1sq * x1sq;
  a(1, 1) = n.sigma2 * n.sigma2;
  return a;
}

Vec2 divergence_vector(const StateVec& x, const NoiseParams& n) {
  return {4.0 * n.sigma1 * n.sigma1 * x(0) * x(0) * x(0), 0.0};
}

CubicValue equilibrium_cubic(double x1, const SystemParams& p) {
  const double c3 = p.rho * p.lambda;
  const double c2 = p.rho * (p.lambda * p.x0 + p.alpha);
  const double c1 = p.rho * p.alpha * p.x0 + p.K * p.beta * p.lambda - p.rho * p.R * p.K;
  const double c0 = p.K * p.beta * p.alpha - p.rho * p.R * p.K * p.x0;
  return {((c3 * x1 + c2) * x1 + c1) * x1 + c0, (3.0 * c3 * x1 + 2.0 * c2) * x1 + c1};
}

SystemSpec vegetation_system(const SystemParams& p) {
  p.validate();
  SystemSpec s;
  s.id = "vegetation";
  s.params = p;
  s.drift = [p](const StateVec& x) { return drift(x, p); };
  s.jacobian = [p](const StateVec& x) { return drift_jacobian(x, p); };
  s.diffusion = [](const StateVec& x, const NoiseParams& n) { return diffusion_a(x, n); };
  s.noise_factor = [](const StateVec& x, const NoiseParams& n) {
    Mat2 sig = Mat2::Zero();
    sig(0, 0) = n.sigma1 * x(0) * x(0);
    sig(1, 1) = n.sigma2;
    return sig;
  };
  s.divergence = [](const StateVec& x, const NoiseParams& n) { return divergence_vector(x, n); };
  s.characteristic = [p](const WidePhase& y, const NoiseParams& n) {
    using W = long double;
    const W x1 = y(0), x2 = y(1), p1 = y(2), p2 = y(3);
    const W rho = p.rho, K = p.K, beta = p.beta, x0 = p.x0, alpha = p.alpha, lambda = p.lambda;
    const W s1 = W(n.sigma1) * n.sigma1, s2 = W(n.sigma2) * n.sigma2;
    const W sx = x1 + x0;
    const W j11 = rho * (x2 - 2 * x1 / K) - beta * x0 / (sx * sx), j12 = rho * x1;
    const W j21 = -lambda * x2, j22 = -alpha - lambda * x1;
    const W a11 = s1 * x1 * x1 * x1 * x1;
    WidePhase d;
    d(0) = rho * x1 * (x2 - x1 / K) - beta * x1 / sx + a11 * p1;
    d(1) = W(p.R) - alpha * x2 - lambda * x1 * x2 + s2 * p2;
    d(2) = -(j11 * p1 + j21 * p2) - 2 * s1 * x1 * x1 * x1 * p1 * p1;
    d(3) = -(j12 * p1 + j22 * p2);
    return d;
  };

  // Largest positive root of the cubic is the vegetated node SN2.
  double hi = p.K;
  while (equilibrium_cubic(hi, p).f < 0.0) hi *= 2.0;
  double x1 = hi;
  for (int i = 0; i < 200; ++i) {
    const auto c = equilibrium_cubic(x1, p);
    const double step = c.f / c.df;
    x1 -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x1))) break;
  }
  s.reference_point = x1 > 0.0 ? StateVec(x1, p.R / (p.lambda * x1 + p.alpha))
                               : StateVec(0.0, p.R / p.alpha);
  return s;
}

SystemSpec ou_system() {
  SystemSpec s;
  s.id = "ou2d";
  s.drift = [](const StateVec& x) { return Vec2(-x); };
  s.jacobian = [](const StateVec&) { return Mat2(-Mat2::Identity()); };
  s.diffusion = [](const StateVec&, const NoiseParams&) { return Mat2(Mat2::Identity()); };
  s.noise_factor = [](const StateVec&, const NoiseParams&) { return Mat2(Mat2::Identity()); };
  s.divergence = [](const StateVec&, const NoiseParams&) { return Vec2(Vec2::Zero()); };
  s.characteristic = [](const WidePhase& y, const NoiseParams&) {
    WidePhase d;
    d << y(2) - y(0), y(3) - y(1), y(2), y(3);
    return d;
  };
  s.reference_point = Vec2::Zero();
  return s;
}

SystemSpec make_system(std::string_view id, const SystemParams& p) {
  if (id == "vegetation") return vegetation_system(p);
  if (id == "ou2d") return ou_system();
  throw std::invalid_argument("unknown system '" + std::string(id) + "'");
}

std::vector<std::string> system_ids() { return {"vegetation", "ou2d"}; }

}  // namespace qpot
