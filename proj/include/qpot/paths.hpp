#pragma once

#include "qpot/landscape.hpp"
#include "qpot/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpot {

enum class PathSource { Learned, Shooting };

/// Time-ordered samples of a most probable path from the stable state towards
/// an end point. `p` is filled for shooting paths only.
struct Path {
  std::vector<double> t;
  std::vector<StateVec> x;
  std::vector<Vec2> p;
  std::vector<double> action;  // cumulative
  PathSource source = PathSource::Learned;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  double total_action() const { return action.empty() ? 0.0 : action.back(); }
};

class PathError : public std::runtime_error {
 public:
  PathError(const std::string& what, double closest) : std::runtime_error(what), closest_(closest) {}
  double closest_approach() const { return closest_; }

 private:
  double closest_;
};

struct ReverseOptions {
  double step = 1e-3;
  std::int64_t max_steps = 10000000;
  double start_offset = 1e-3;
  double stop_radius = 1e-3;
  // The learned field vanishes at its own equilibrium, which can sit just
  // outside stop_radius; integration also ends once the speed drops below
  // stall_speed within capture_radius of the reference.
  double stall_speed = 1e-7;
  double capture_radius = 0.5;
};

/// Integrates x' = -(b + a grad V) from `end` (displaced start_offset toward
/// the reference) until within stop_radius of the reference (or stalled next
/// to it), then reverses so the path runs reference -> end. The cumulative
/// action is the trapezoidal integral of 1/2 grad V^T a grad V, which equals
/// the Freidlin-Wentzell integrand for x' = b + a grad V. Throws PathError.
Path mpp_reverse(const QuasipotentialModel& m, const StateVec& end, const ReverseOptions& opt = {});

struct ShootingOptions {
  double step = 2e-3;
  double launch_radius = 1e-4;
  double max_time = 120.0;
  double tolerance = 1e-3;  // required miss distance for a point target
  Box work_box{-0.5, 9.0, -2.0, 6.0};
};

/// Linear map P with p = P dx on the unstable subspace of the linearized
/// characteristic flow [[grad b, a], [0, -grad b^T]] at a stable point.
Mat2 launch_map(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable);

/// Zero-energy characteristic x' = b + a p, p' = -grad b^T p - 1/2 grad(p^T a p)
/// launched from `stable` + r (cos theta, sin theta), integrated by fixed-step
/// RK4 with the action 1/2 p^T a p as an extra state.
Path characteristic(const SystemSpec& sys, const NoiseParams& noise, const StateVec& stable, const Mat2& launch,
                    double theta, const ShootingOptions& opt, double t_end);

/// Shooting towards a point target: angle brackets of the signed miss at
/// closest approach, refined by bisection; the path is truncated at the
/// closest approach. Throws PathError when no angle comes within tolerance.
Path shooting_mpp(const SystemSpec& sys, const NoiseParams& noise, const StateVec& target,
                  const ShootingOptions& opt = {});

struct LineShot {
  Path path;      // truncated at the first crossing of x1 = c
  StateVec hit;   // crossing point
  double action;  // quasipotential of the hit point
};

/// Characteristic of least action among those reaching the line x1 = c from
/// the reference side; network-independent estimate of the boundary minimum.
LineShot shooting_line_minimum(const SystemSpec& sys, const NoiseParams& noise, double c,
                               const ShootingOptions& opt = {});

/// H(x, p) = <b, p> + 1/2 <p, a p>
double hamiltonian(const SystemSpec& sys, const NoiseParams& noise, const StateVec& x, const Vec2& p);

/// Freidlin-Wentzell action 1/2 (x' - b)^T a^{-1} (x' - b) by trapezoid
/// rule, with x' from central differences of the samples.
double fw_action(const Path& path, const SystemSpec& sys, const NoiseParams& noise);

/// Symmetric Hausdorff distance between the two state polylines.
double path_distance(const Path& a, const Path& b);

struct DipResult {
  std::size_t index;
  StateVec point;
  bool dips;  // interior minimum of x2 strictly below both endpoint values
};

DipResult moisture_dip_check(const Path& path);

/// x2 on the path at the first sample with x1 nearest to `x1`, by linear
/// interpolation between samples; nullopt when the path never spans x1.
std::optional<double> x2_at(const Path& path, double x1);

/// Path CSV: t, x1, x2, [p1, p2,] cumulative_action.
void write_path_csv(const std::string& file, const Path& path, const std::string& header);

}  // namespace qpot
