#pragma once

#include "qpot/commands.hpp"
#include "qpot/config.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace qpot::testing {

/// A shipped configuration with its checkpoint resolved against the source
/// tree and artifacts redirected to a scratch directory.
inline RunConfig shipped_config(const std::string& name) {
  namespace fs = std::filesystem;
  RunConfig cfg = load_config(std::string(QPOT_SOURCE_DIR) + "/configs/" + name + ".ini");
  if (!cfg.checkpoint.empty() && fs::path(cfg.checkpoint).is_relative()) {
    cfg.checkpoint = (fs::path(QPOT_SOURCE_DIR) / cfg.checkpoint).string();
  }
  cfg.out_dir = (fs::temp_directory_path() / ("qpot_" + name)).string();
  cfg.finalize();
  return cfg;
}

/// The finished checkpoint of a shipped configuration, if present.
inline std::optional<TrainedModel> cached_model(const std::string& name) { return load_trained(shipped_config(name)); }

}  // namespace qpot::testing
