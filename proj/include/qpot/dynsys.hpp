#pragma once

#include "qpot/model.hpp"

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qpot {

enum class FixedPointKind { StableNode, Saddle, Unstable };

std::string_view to_string(FixedPointKind k);

struct FixedPoint {
  StateVec location;
  FixedPointKind kind;
  std::array<std::complex<double>, 2> eigenvalues;
  /// Real parts of the Jacobian eigenvectors, unit length.
  std::array<Vec2, 2> eigenvectors;
};

/// Eigen-decomposes the drift Jacobian at `x` and classifies the point.
FixedPoint classify_fixed_point(const SystemSpec& sys, const StateVec& x);

/// SN1 = (0, R/alpha) plus every positive root of the equilibrium cubic,
/// sorted by x1.
std::vector<FixedPoint> find_fixed_points(const SystemParams& p);

/// Returns the saddle and the interior stable node (US, SN2) when the system
/// is bistable.
struct BistableStructure {
  FixedPoint bare;       // SN1
  FixedPoint saddle;     // US
  FixedPoint vegetated;  // SN2
};
std::optional<BistableStructure> bistable_structure(const SystemParams& p);

struct SaddleNode {
  double R;
  double x1;
};

/// Simultaneous root of f(x1; R) = 0 and f'(x1; R) = 0 by 2-D Newton.
/// The R field of `p` is ignored.
SaddleNode saddle_node_critical(const SystemParams& p, int max_iter = 100);

/// Rainfall at which the saddle collides with SN1, i.e. f(0; R) = 0.
double sn1_stability_threshold(const SystemParams& p);

struct BranchRow {
  double R;
  StateVec location;
  FixedPointKind kind;
  bool interior;  // false for the trivial point SN1
};

/// All equilibria for each rainfall value. `R_grid` must be ascending.
std::vector<BranchRow> bifurcation_branch(std::span<const double> R_grid, const SystemParams& base);

struct Box {
  double x1_min = 1.0;
  double x1_max = 7.0;
  double x2_min = 0.0;
  double x2_max = 2.0;

  bool contains(const StateVec& x) const {
    return x(0) >= x1_min && x(0) <= x1_max && x(1) >= x2_min && x(1) <= x2_max;
  }
  double area() const { return (x1_max - x1_min) * (x2_max - x2_min); }
};

struct ManifoldOptions {
  double offset = 1e-4;       // initial displacement from the saddle
  double rel_tol = 1e-8;      // RK4 step-doubling tolerance
  double max_spacing = 0.01;  // after arc-length resampling
  double capture_radius = 1e-3;
  double max_time = 1e4;
};

/// Arc-length parameterized polyline. For a stable manifold the polyline
/// separates the basin of `interior_attractor` from that of
/// `exterior_attractor`.
class Separatrix {
 public:
  Separatrix() = default;
  Separatrix(std::vector<StateVec> points, std::size_t saddle_index);

  const std::vector<StateVec>& points() const { return points_; }
  const std::vector<double>& arclength() const { return arclength_; }
  std::size_t saddle_index() const { return saddle_index_; }
  double length() const { return arclength_.empty() ? 0.0 : arclength_.back(); }
  double max_spacing() const;

  /// Distance from x to the polyline.
  double distance(const StateVec& x) const;

  /// Number of polyline segments properly crossed by the segment [a, b].
  int crossings(const StateVec& a, const StateVec& b) const;

  /// Resamples by uniform arc length with spacing at most `spacing`; the
  /// saddle sample is kept exactly.
  Separatrix resampled(double spacing) const;

  // Context for basin classification.
  StateVec interior_attractor = StateVec::Zero();
  StateVec exterior_attractor = StateVec::Zero();
  std::function<Vec2(const StateVec&)> drift;

 private:
  std::vector<StateVec> points_;
  std::vector<double> arclength_;
  std::size_t saddle_index_ = 0;
};

/// Stable manifold of a saddle, traced in reverse time until the box edge.
Separatrix stable_manifold(const SystemSpec& sys, const FixedPoint& saddle, const Box& box,
                           std::span<const StateVec> attractors, const ManifoldOptions& opt = {});

/// Unstable manifold of a saddle, traced forward until an attractor ball or
/// the box edge.
Separatrix unstable_manifold(const SystemSpec& sys, const FixedPoint& saddle, const Box& box,
                             std::span<const StateVec> attractors, const ManifoldOptions& opt = {});

/// Working box for separatrix tracing; covers the training box and the
/// region Monte Carlo trajectories visit before escaping.
inline constexpr Box kSeparatrixBox{0.0, 8.0, -1.0, 4.0};

/// Stable manifold of the saddle of a bistable vegetation system, with the
/// vegetated state as interior attractor. Throws std::runtime_error when the
/// parameters are not bistable.
Separatrix basin_separatrix(const SystemSpec& sys, const Box& box = kSeparatrixBox);

enum class BasinSide { Interior, Exterior };

/// Forward-flow oracle: index of the first attractor whose ball of `radius`
/// the deterministic trajectory enters, or nullopt on timeout.
std::optional<std::size_t> flow_to_attractor(const std::function<Vec2(const StateVec&)>& drift,
                                             const StateVec& x, std::span<const StateVec> attractors,
                                             double radius = 0.05, double max_time = 1e4);

/// Crossing-parity test of the segment x -> interior attractor; points within
/// 1e-6 of the polyline are resolved by the forward-flow oracle.
BasinSide basin_side(const StateVec& x, const Separatrix& sep);

}  // namespace qpot
