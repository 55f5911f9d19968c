#pragma once

#include "qpot/dynsys.hpp"
#include "qpot/landscape.hpp"
#include "qpot/paths.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qpot {

/// Trapezoidal integral of F over the path's time parameter, skipping
/// samples within `cutoff` of any of `fixed_points` (F vanishes there, so
/// the infinite-time tails contribute nothing). Throws on a non-finite F.
double f_integral(const Path& path, const QuasipotentialModel& m, std::span<const StateVec> fixed_points,
                  double cutoff = 1e-3);

enum class ExitCase { A, B };  // non-characteristic line, characteristic separatrix

/// Frozen ingredients of the asymptotic mean first exit time.
struct ExitAsymptotics {
  ExitCase kind = ExitCase::A;
  StateVec exit_point = StateVec::Zero();  // x* (A) or the saddle (B)
  double barrier = 0.0;                    // V at exit_point
  double f_integral = 0.0;
  // Case A
  double mu_star = 0.0;
  double det_h_star = 0.0;
  // Case B
  double lambda_star = 0.0;
  double det_H_star = 0.0;
  double det_H_bar = 0.0;

  /// Throws std::invalid_argument when the ingredients violate their sign
  /// conditions.
  void validate() const;
  /// Prefactor L(eps); constant in eps for case B.
  double prefactor(double eps) const;
  /// L(eps) exp(barrier / eps)
  double mfpt(double eps) const;
};

/// (1/mu*) sqrt(det h* / (2 pi eps)) exp(int F) exp(V(x*) / eps)
double mfpt_case_a(double eps, const ExitAsymptotics& a);

/// (pi/lambda*) sqrt(|det H*| / det H_bar) exp(int F) exp(V(US) / eps)
double mfpt_case_b(double eps, const ExitAsymptotics& a);

/// Case A for the line x1 = c: boundary minimum, prefactor quantities, and
/// F integrated along the learned path into the minimum.
ExitAsymptotics case_a_asymptotics(const QuasipotentialModel& m, double c, const Box& search = {},
                                   Path* path_out = nullptr);

/// Case B for the separatrix through `saddle`: Riccati Hessians at the
/// reference and the saddle, the unstable saddle eigenvalue, and F along the
/// learned path to the saddle.
ExitAsymptotics case_b_asymptotics(const QuasipotentialModel& m, const FixedPoint& saddle,
                                   Path* path_out = nullptr);

/// Largest real eigenvalue of the drift Jacobian at a saddle.
double unstable_eigenvalue(const SystemSpec& sys, const StateVec& saddle);

/// Barrier estimated from mean exit times: least-squares slope of ln T
/// against 1/eps, after dividing out the eps^{-1/2} of the case A prefactor.
double barrier_from_times(ExitCase kind, std::span<const double> eps, std::span<const double> mean_times);

struct MfptRow {
  double eps;
  double asymptotic;
  std::optional<double> mc_mean, mc_ci_low, mc_ci_high;
};

std::vector<MfptRow> mfpt_curve(const ExitAsymptotics& a, std::span<const double> eps_grid);

/// eps, mfpt_asymptotic, then MC columns and their ratio when any row has them.
void write_mfpt_csv(const std::string& file, const std::vector<MfptRow>& rows, const std::string& header);

}  // namespace qpot
