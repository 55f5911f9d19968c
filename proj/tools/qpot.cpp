#include "qpot/commands.hpp"
#include "qpot/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kComputeFailure = 1, kConfigError = 2 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned quasipotentials and exit times for a stochastic vegetation-water model"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string eps_list;
  std::string exit_case;
  std::string noise_case;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides [run] seed)");
  app.add_option("--out", out_dir, "output directory (overrides [run] out)");
  app.add_option("--eps", eps_list, "comma-separated noise intensities");
  app.add_option("--case", exit_case, "exit boundary: a (line x1 = c) or b (separatrix)")
      ->check(CLI::IsMember({"a", "b"}));
  app.add_option("--noise-case", noise_case, "noise configuration")->check(CLI::IsMember({"i", "ii", "iii"}));

  auto* analyze = app.add_subcommand("analyze", "fixed points, manifolds and bifurcation branch");
  auto* train = app.add_subcommand("train", "train the decomposition network");
  auto* mpp = app.add_subcommand("mpp", "learned and shooting most probable paths");
  std::string end_point = "saddle";
  mpp->add_option("--end", end_point, "\"saddle\", \"boundary\" or x1,x2");
  auto* mfpt = app.add_subcommand("mfpt", "asymptotic mean first exit times");
  bool with_mc = false;
  mfpt->add_flag("--with-mc", with_mc, "append Monte Carlo estimates");
  auto* mc = app.add_subcommand("mc", "Monte Carlo exit times");
  auto* validate = app.add_subcommand("validate", "run the oracle checks");
  bool skip_trained = false;
  validate->add_flag("--no-trained", skip_trained, "skip checks that need a trained checkpoint");

  CLI11_PARSE(app, argc, argv);

  qpot::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = qpot::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!eps_list.empty()) cfg.eps_grid = qpot::parse_eps_list(eps_list);
    if (!exit_case.empty()) cfg.exit_case = exit_case;
    if (!noise_case.empty()) {
      cfg.noise_case = noise_case;
      const double eps = cfg.noise.eps;
      cfg.noise = qpot::noise_case(noise_case);
      cfg.noise.eps = eps;
    }
    cfg.finalize();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*analyze) qpot::cmd_analyze(cfg, std::cout);
    if (*train) qpot::cmd_train(cfg, std::cout);
    if (*mpp) qpot::cmd_mpp(cfg, end_point, std::cout);
    if (*mfpt) qpot::cmd_mfpt(cfg, with_mc, std::cout);
    if (*mc) qpot::cmd_mc(cfg, std::cout);
    if (*validate) return qpot::cmd_validate(cfg, !skip_trained, std::cout) ? kOk : kComputeFailure;
  } catch (const qpot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const qpot::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kComputeFailure;
  }
  return kOk;
}
