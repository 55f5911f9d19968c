#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qpot {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using StateVec = Vec2;
/// (x1, x2, p1, p2) in extended precision.
using WidePhase = Eigen::Matrix<long double, 4, 1>;

/// Raised when a state lies outside the domain where the drift is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rates and capacities of the vegetation-water model. R is the mean rainfall.
struct SystemParams {
  double rho = 1.0;
  double K = 10.0;
  double beta = 3.0;
  double x0 = 1.0;
  double alpha = 1.0;
  double lambda = 0.12;
  double R = 1.55;

  /// Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;
};

/// Noise amplitudes. a(x) = diag(sigma1^2 x1^4, sigma2^2); eps scales the
/// white-noise intensity. sigma1 is kept nonnegative since only its square
/// enters the diffusion matrix.
struct NoiseParams {
  double sigma1 = 0.1;
  double sigma2 = 1.0;
  double eps = 0.05;

  void validate() const;
};

/// Named noise configurations (i), (ii), (iii) of the noise-case study.
NoiseParams noise_case(std::string_view name);

// Vegetation-water system.
Vec2 drift(const StateVec& x, const SystemParams& p);
Mat2 drift_jacobian(const StateVec& x, const SystemParams& p);
Mat2 diffusion_a(const StateVec& x, const NoiseParams& n);
Vec2 divergence_vector(const StateVec& x, const NoiseParams& n);

struct CubicValue {
  double f;
  double df;
};

/// Cubic whose positive roots are the x1 coordinates of the interior
/// equilibria; x2 = R / (lambda x1 + alpha) on those.
CubicValue equilibrium_cubic(double x1, const SystemParams& p);

/// One 2-D system behind a common interface. All callables are pure.
struct SystemSpec {
  std::string id;
  SystemParams params;
  std::function<Vec2(const StateVec&)> drift;
  std::function<Mat2(const StateVec&)> jacobian;
  /// a(x) = sigma(x) sigma(x)^T
  std::function<Mat2(const StateVec&, const NoiseParams&)> diffusion;
  /// sigma(x), the factor used by the Euler-Maruyama increment.
  std::function<Mat2(const StateVec&, const NoiseParams&)> noise_factor;
  /// A_i = sum_j d a_ij / d x_j
  std::function<Vec2(const StateVec&, const NoiseParams&)> divergence;
  /// Characteristic (Hamiltonian) vector field
  ///   x' = b + a p,  p' = -grad b^T p - 1/2 grad_x(p^T a p)
  /// in extended precision: shooting onto a saddle amplifies rounding in
  /// the launch direction by about 1e13.
  std::function<WidePhase(const WidePhase&, const NoiseParams&)> characteristic;
  /// Stable fixed point used as the quasipotential reference.
  StateVec reference_point;
};

SystemSpec vegetation_system(const SystemParams& p = {});

/// b(x) = -x, a = identity. Exact quasipotential |x|^2 with l = 0.
SystemSpec ou_system();

/// Registry lookup: "vegetation" or "ou2d".
SystemSpec make_system(std::string_view id, const SystemParams& p = {});

std::vector<std::string> system_ids();

}  // namespace qpot
