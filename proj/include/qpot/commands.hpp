#pragma once

#include "qpot/config.hpp"
#include "qpot/landscape.hpp"
#include "qpot/trainer.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace qpot {

/// Pipeline steps behind the CLI subcommands. Each writes its artifacts under
/// cfg.out_dir and logs progress to `log`.

/// fixed_points.csv, separatrix.csv, unstable_manifold.csv, bifurcation.csv
void cmd_analyze(const RunConfig& cfg, std::ostream& log);

struct TrainedModel {
  Checkpoint checkpoint;
  QuasipotentialModel model;
};

/// Trains (or resumes from a matching checkpoint) until cfg.train.epochs, then
/// writes loss_history.csv, field_grid.csv and train_summary.json.
TrainedModel cmd_train(const RunConfig& cfg, std::ostream& log);

/// Loads the checkpoint at cfg.checkpoint_path() when it matches the config
/// and has reached the epoch budget; otherwise runs cmd_train.
TrainedModel obtain_model(const RunConfig& cfg, std::ostream& log);

/// Loads a finished checkpoint without training; nullopt when absent or
/// incomplete. Throws CheckpointError when it belongs to another config.
std::optional<TrainedModel> load_trained(const RunConfig& cfg);

/// Collocation points for a config: the separatrix-filtered box for the
/// vegetation system, the whole box otherwise.
CollocationSet collocation_for(const RunConfig& cfg);

/// Learned (reverse-time) and shooting paths to `end` ("saddle", "boundary"
/// or "x1,x2"): path CSVs plus mpp_summary_<end>.json with distance and
/// actions.
void cmd_mpp(const RunConfig& cfg, const std::string& end, std::ostream& log);

/// mfpt_table_<case>.csv and mfpt_summary_<case>.json for cfg.exit_case over
/// cfg.eps_grid, optionally joined with Monte Carlo estimates.
void cmd_mfpt(const RunConfig& cfg, bool with_mc, std::ostream& log);

/// exit_times_<case>_eps<eps>.csv per eps in the grid, and mc_summary_<case>.json.
void cmd_mc(const RunConfig& cfg, std::ostream& log);

/// Prints one PASS/FAIL line per oracle check; true iff all pass.
bool cmd_validate(const RunConfig& cfg, bool include_trained, std::ostream& log);

}  // namespace qpot
