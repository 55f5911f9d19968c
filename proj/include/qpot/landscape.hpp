#pragma once

#include "qpot/adnet.hpp"
#include "qpot/dynsys.hpp"
#include "qpot/model.hpp"

#include <vector>

namespace qpot {

/// Trained network bound to its reference stable point, system and noise.
/// V(x) = V-hat(x) + |x - reference|^2, and b = -1/2 a grad V + l.
class QuasipotentialModel {
 public:
  QuasipotentialModel(nn::NetParams params, StateVec reference, SystemSpec system, NoiseParams noise);

  struct Point {
    double V;
    Vec2 gradV;
    Vec2 l;
    Mat2 jac_l;
  };

  Point eval(const StateVec& x) const;

  double V(const StateVec& x) const;
  Vec2 gradV(const StateVec& x) const;
  /// Hessian of V by differences of the exact gradient (h = 1e-4), with a
  /// Richardson estimate at h/2 when the two step sizes disagree by > 5 %.
  Mat2 hessV(const StateVec& x) const;
  Vec2 l(const StateVec& x) const;
  double div_l(const StateVec& x) const;

  /// |b + 1/2 a grad V - l|
  double decomposition_residual(const StateVec& x) const;

  /// Transport-equation integrand div l + 1/2 <A, grad V>.
  double F(const StateVec& x) const;

  /// Fluctuation field b + a grad V followed by most probable paths.
  Vec2 fluctuation_field(const StateVec& x) const;

  const nn::NetParams& params() const { return params_; }
  const StateVec& reference() const { return reference_; }
  const SystemSpec& system() const { return system_; }
  const NoiseParams& noise() const { return noise_; }

 private:
  nn::NetParams params_;
  StateVec reference_;
  SystemSpec system_;
  NoiseParams noise_;
};

/// Hessian of the quasipotential at a fixed point from the Lyapunov form of
/// the linearized Hamilton-Jacobi equation: M Q^T + Q M = a with
/// Q = -grad b, H = M^{-1}. Network independent.
Mat2 hessian_riccati(const SystemSpec& sys, const NoiseParams& noise, const StateVec& fixed_point);

struct LineArgmin {
  StateVec point;
  double V;
  bool at_endpoint;  // minimum sits on the end of the search range
};

/// Minimizes V(c, x2) over x2 in [x2_lo, x2_hi]: golden-section search on a
/// bracket from a coarse scan, then Newton polish on dV/dx2.
LineArgmin boundary_argmin_line(const QuasipotentialModel& m, double c, double x2_lo, double x2_hi);

/// Exterior unit normal of the vertical line x1 = c, pointing away from the
/// side that contains the reference point.
Vec2 line_exterior_normal(const QuasipotentialModel& m, double c);

/// <1/2 a grad V + l, n> at x*, n the exterior normal of x1 = x*(0).
double mu_star(const QuasipotentialModel& m, const StateVec& xstar);

/// Hessian of V restricted to the tangent line of a vertical boundary.
double det_h_star(const QuasipotentialModel& m, const StateVec& xstar);

struct GridRow {
  double x1, x2, V, l1, l2, F;
};

std::vector<GridRow> evaluate_grid(const QuasipotentialModel& m, const Box& box, int n1, int n2);

}  // namespace qpot
