#pragma once

#include "qpot/dynsys.hpp"
#include "qpot/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qpot {

struct McConfig {
  double dt = 1e-3;
  std::int64_t max_steps = 100000000;
  int trajectories = 500;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Exit predicate for a trajectory leaving the vegetated basin, either across
/// the vertical line x1 = c (exit when x1 <= c) or across the separatrix
/// polyline, with a capture ball around the bare state as fallback.
class ExitSpec {
 public:
  enum class Kind { Line, Separatrix };

  static ExitSpec line(double c);
  static ExitSpec separatrix(const Separatrix& sep, const StateVec& bare_state, double capture_radius = 0.05);

  Kind kind() const { return kind_; }
  double threshold() const { return c_; }

  enum class Trigger { None, Crossing, Capture };

  /// Whether the step a -> b leaves the domain, and by which test.
  Trigger test(const StateVec& a, const StateVec& b) const;

 private:
  ExitSpec() = default;

  bool crosses(const StateVec& a, const StateVec& b) const;

  Kind kind_ = Kind::Line;
  double c_ = 0.0;
  std::vector<StateVec> poly_;
  StateVec bare_ = StateVec::Zero();
  double capture_r2_ = 0.0;

  // Uniform cell index over the polyline: segment ids per cell, dilated by a
  // cell so a short step only needs the cell of its start point.
  double cell_ = 0.05;
  double gx0_ = 0.0, gy0_ = 0.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

/// x + b(x) dt + sigma(x) sqrt(eps dt) z
StateVec em_step(const StateVec& x, double dt, const SystemSpec& sys, const NoiseParams& noise, const Vec2& z);

/// Seed of trajectory `index` under `master` (splitmix64 of both).
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

struct ExitOutcome {
  std::optional<double> time;  // empty when censored
  std::int64_t steps = 0;
  ExitSpec::Trigger trigger = ExitSpec::Trigger::None;
};

/// Simulates from x0 until the exit predicate fires or max_steps elapse.
/// Throws std::runtime_error on a non-finite state.
ExitOutcome first_exit(const StateVec& x0, const ExitSpec& spec, const SystemSpec& sys, const NoiseParams& noise,
                       const McConfig& cfg, std::uint64_t seed);

struct McResult {
  std::vector<std::optional<double>> times;  // by trajectory index
  std::vector<std::uint64_t> seeds;
  std::vector<ExitSpec::Trigger> triggers;
  int censored = 0;
  double mean = 0.0;  // over uncensored samples
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t total_steps = 0;
};

/// Independent trajectories (OpenMP), aggregated in index order. The 95 %
/// interval is a normal approximation on the log scale (delta method).
/// Throws std::runtime_error when every trajectory is censored.
McResult exit_ensemble(const StateVec& x0, const ExitSpec& spec, const SystemSpec& sys, const NoiseParams& noise,
                       const McConfig& cfg);

/// Per-trajectory CSV: index, seed, exit_time (or CENSORED).
void write_exit_times_csv(const std::string& path, const McResult& r, const std::string& header);

}  // namespace qpot
