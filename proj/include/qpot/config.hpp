#pragma once

#include "qpot/mc.hpp"
#include "qpot/model.hpp"
#include "qpot/trainer.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpot {

inline constexpr const char* kToolVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run needs. Loaded from an INI file:
///
///   [run]      seed, out, checkpoint
///   [system]   id, rho, K, beta, x0, alpha, lambda, R
///   [noise]    case (i|ii|iii) or sigma1, sigma2; eps
///   [train]    epochs, raw_samples, lr, lambda1, lambda2, delta, box,
///              checkpoint_every, record_every, hidden_layers, width
///   [mc]       dt, max_steps, trajectories
///   [exit]     case (a|b), line, eps
struct RunConfig {
  std::string system_id = "vegetation";
  SystemParams system;
  std::string noise_case = "i";  // empty when sigma1/sigma2 are given explicitly
  NoiseParams noise;
  TrainConfig train;
  McConfig mc;
  std::string exit_case = "a";
  double exit_line = 3.0;
  std::vector<double> eps_grid{0.03, 0.05, 0.08};
  std::string out_dir = "out";
  std::string checkpoint;  // defaults to <out>/checkpoint.json
  std::uint64_t seed = 1;

  /// Propagates the master seed into the training and Monte Carlo configs and
  /// validates every part. Throws ConfigError.
  void finalize();

  std::string checkpoint_path() const;
  SystemSpec make_system_spec() const;

  /// Hash of the canonical rendering of every field.
  std::uint64_t fingerprint() const;
};

RunConfig load_config(const std::string& path);

/// Comma-separated list of positive numbers.
std::vector<double> parse_eps_list(const std::string& text);

/// "# key: value" lines identifying the tool version, config and seed.
std::string artifact_header(const RunConfig& cfg);

}  // namespace qpot
