#pragma once

#include "qpot/adnet.hpp"
#include "qpot/dynsys.hpp"
#include "qpot/landscape.hpp"
#include "qpot/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qpot {

struct TrainConfig {
  Box box;
  int raw_samples = 10000;
  std::int64_t epochs = 200000;
  double lr = 1e-3;
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double delta = 1e-3;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 10000;  // 0 disables periodic checkpoints
  int record_every = 100;
  nn::NetArch arch;

  void validate() const;
};

/// Identifies everything that determines the training trajectory except the
/// epoch budget, so a run can be resumed towards a larger target.
std::uint64_t train_fingerprint(const TrainConfig& cfg, const SystemSpec& sys, const NoiseParams& noise);

struct CollocationSet {
  Eigen::Matrix2Xd points;
  int raw_count = 0;
  int retained_count = 0;
  std::uint64_t seed = 0;
};

/// Uniform points in cfg.box; with a separatrix, only those on the interior
/// side are kept.
CollocationSet sample_collocation(const TrainConfig& cfg, const Separatrix* sep);

struct LossTerms {
  double dyn = 0.0;
  double orth = 0.0;
  double zero = 0.0;
};

double total_loss(const LossTerms& t, double lambda1, double lambda2);

/// L_dyn + lambda1 L_orth + lambda2 L_0 over network jets, with
/// V = V-hat + |x - reference|^2. The reference point is the single anchor.
class DecompositionLoss : public nn::LossFunction {
 public:
  DecompositionLoss(SystemSpec sys, NoiseParams noise, StateVec reference, double delta, double lambda1,
                    double lambda2);

  Eigen::Matrix2Xd anchors() const override { return reference_; }

  double point_sum(const Eigen::Ref<const Eigen::Matrix2Xd>& x, const nn::BatchJets& jets, double weight,
                   nn::BatchJets* adjoint) const override;
  double anchor_term(const nn::BatchJets& jets, nn::BatchJets* adjoint) const override;

  /// Weighted sums of the L_dyn and L_orth summands (zero field unused).
  LossTerms point_terms(const Eigen::Ref<const Eigen::Matrix2Xd>& x, const nn::BatchJets& jets, double weight,
                        nn::BatchJets* adjoint) const;

  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  double delta() const { return delta_; }

 private:
  SystemSpec sys_;
  NoiseParams noise_;
  StateVec reference_;
  double delta_, lambda1_, lambda2_;
};

LossTerms loss_terms(const nn::NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& pts, const SystemSpec& sys,
                     const NoiseParams& noise, const StateVec& reference, double delta);

struct HistoryRow {
  std::int64_t epoch;
  LossTerms terms;
  double total;
};

struct TrainState {
  nn::NetParams params;
  nn::AdamState adam;
  std::int64_t epoch = 0;  // completed updates
  std::vector<HistoryRow> history;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t epoch, double loss);
  std::int64_t epoch() const { return epoch_; }

 private:
  std::int64_t epoch_;
};

TrainState initial_state(const TrainConfig& cfg);

struct TrainHooks {
  std::function<void(const TrainState&)> on_checkpoint;
  std::function<void(const HistoryRow&)> on_record;
};

/// Full-batch Adam from `state` until cfg.epochs updates are done. Loss rows
/// are recorded before the update at every multiple of record_every, plus a
/// final row at cfg.epochs.
void train(const TrainConfig& cfg, const SystemSpec& sys, const NoiseParams& noise, const CollocationSet& pts,
           TrainState& state, const TrainHooks& hooks = {});

QuasipotentialModel bind_model(const nn::NetParams& p, const SystemSpec& sys, const NoiseParams& noise);

/// Loss-history CSV: epoch, L_dyn, L_orth, L_0, total.
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows, const std::string& header);

// Checkpoints ---------------------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string system_id;
  SystemParams system_params;
  NoiseParams noise;
  TrainConfig config;
  std::uint64_t fingerprint = 0;
  TrainState state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);

/// Throws CheckpointError on a version mismatch, malformed content, or a
/// flat parameter count that disagrees with the stored architecture.
Checkpoint load_checkpoint(const std::string& path);

/// Loads and additionally requires the stored fingerprint and architecture to
/// equal the expected ones.
Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_fingerprint, const nn::NetArch& arch);

std::string hex64(std::uint64_t v);

/// 64-bit FNV-1a; stable across platforms, used for config fingerprints.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace qpot
