#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpot::ode {

/// Classical fourth-order Runge-Kutta step for y' = f(y).
template <class State, class Field>
State rk4_step(const Field& f, const State& y, double h) {
  const State k1 = f(y);
  const State k2 = f(State(y + 0.5 * h * k1));
  const State k3 = f(State(y + 0.5 * h * k2));
  const State k4 = f(State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct AdaptiveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 0.05;
};

class StepUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RK4 with step-doubling error control. `h` carries the proposed step in and
/// the next proposal out; the accepted step size is returned.
template <class State, class Field>
double rk4_adaptive_step(const Field& f, State& y, double& h, const AdaptiveOptions& opt) {
  for (;;) {
    if (std::abs(h) < opt.h_min) throw StepUnderflow("adaptive RK4 step size underflow");
    const State full = rk4_step(f, y, h);
    const State half = rk4_step(f, rk4_step(f, y, 0.5 * h), 0.5 * h);
    const double scale = opt.abs_tol + opt.rel_tol * std::max(y.cwiseAbs().maxCoeff(), half.cwiseAbs().maxCoeff());
    const double err = (half - full).cwiseAbs().maxCoeff() / 15.0 / scale;
    if (!std::isfinite(err)) {
      h *= 0.25;
      continue;
    }
    if (err <= 1.0) {
      const double taken = h;
      // Richardson-extrapolated fifth-order value.
      y = half + (half - full) / 15.0;
      const double grow = err > 0.0 ? std::min(4.0, 0.9 * std::pow(err, -0.2)) : 4.0;
      h = std::copysign(std::min(std::abs(h) * grow, opt.h_max), h);
      return taken;
    }
    h *= std::max(0.1, 0.9 * std::pow(err, -0.25));
  }
}

}  // namespace qpot::ode
