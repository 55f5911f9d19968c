#include "qpot/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <sstream>

namespace qpot {

namespace pt = boost::property_tree;

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (auto part : parts) {
    boost::trim(part);
    if (part.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: '" + part + "'");
    }
    if (used != part.size()) throw ConfigError("trailing characters in list entry: '" + part + "'");
    if (!(v > 0.0)) throw ConfigError("list entries must be positive: '" + part + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

namespace {

template <class T>
void read(const pt::ptree& t, const std::string& key, T& dst) {
  if (const auto v = t.get_optional<std::string>(key)) {
    try {
      dst = t.get<T>(key);
    } catch (const pt::ptree_error&) {
      throw ConfigError("bad value for " + key + ": '" + *v + "'");
    }
  }
}

}  // namespace

RunConfig load_config(const std::string& path) {
  pt::ptree t;
  try {
    pt::read_ini(path, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  RunConfig c;
  read(t, "run.seed", c.seed);
  read(t, "run.out", c.out_dir);
  read(t, "run.checkpoint", c.checkpoint);

  read(t, "system.id", c.system_id);
  read(t, "system.rho", c.system.rho);
  read(t, "system.K", c.system.K);
  read(t, "system.beta", c.system.beta);
  read(t, "system.x0", c.system.x0);
  read(t, "system.alpha", c.system.alpha);
  read(t, "system.lambda", c.system.lambda);
  read(t, "system.R", c.system.R);

  read(t, "noise.case", c.noise_case);
  if (!c.noise_case.empty()) {
    try {
      c.noise = noise_case(c.noise_case);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (t.get_optional<std::string>("noise.sigma1") || t.get_optional<std::string>("noise.sigma2")) {
    if (t.get_optional<std::string>("noise.case")) throw ConfigError("give either noise.case or noise.sigma1/sigma2");
    c.noise_case.clear();
    read(t, "noise.sigma1", c.noise.sigma1);
    read(t, "noise.sigma2", c.noise.sigma2);
  }
  read(t, "noise.eps", c.noise.eps);

  read(t, "train.epochs", c.train.epochs);
  read(t, "train.raw_samples", c.train.raw_samples);
  read(t, "train.lr", c.train.lr);
  read(t, "train.lambda1", c.train.lambda1);
  read(t, "train.lambda2", c.train.lambda2);
  read(t, "train.delta", c.train.delta);
  read(t, "train.checkpoint_every", c.train.checkpoint_every);
  read(t, "train.record_every", c.train.record_every);
  read(t, "train.hidden_layers", c.train.arch.hidden_layers);
  read(t, "train.width", c.train.arch.width);
  if (const auto box = t.get_optional<std::string>("train.box")) {
    std::vector<std::string> parts;
    boost::split(parts, *box, boost::is_any_of(","));
    if (parts.size() != 4) throw ConfigError("train.box needs x1_min,x1_max,x2_min,x2_max");
    try {
      c.train.box = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
    } catch (const std::exception&) {
      throw ConfigError("bad value for train.box: '" + *box + "'");
    }
  }

  read(t, "mc.dt", c.mc.dt);
  read(t, "mc.max_steps", c.mc.max_steps);
  read(t, "mc.trajectories", c.mc.trajectories);

  read(t, "exit.case", c.exit_case);
  read(t, "exit.line", c.exit_line);
  if (const auto eps = t.get_optional<std::string>("exit.eps")) c.eps_grid = parse_eps_list(*eps);
  return c;
}

void RunConfig::finalize() {
  train.seed = seed;
  mc.seed = seed;
  try {
    make_system(system_id, system);
    system.validate();
    noise.validate();
    train.validate();
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (exit_case != "a" && exit_case != "b") throw ConfigError("exit.case must be a or b");
  if (eps_grid.empty()) throw ConfigError("eps grid is empty");
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw ConfigError("eps values must be positive");
  }
}

std::string RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? (std::filesystem::path(out_dir) / "checkpoint.json").string() : checkpoint;
}

SystemSpec RunConfig::make_system_spec() const { return make_system(system_id, system); }

std::uint64_t RunConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << train_fingerprint(train, make_system_spec(), noise) << ';' << noise.eps << ';' << mc.dt << ','
     << mc.max_steps << ',' << mc.trajectories << ';' << exit_case << ',' << exit_line << ';' << seed << ';';
  for (double e : eps_grid) os << e << ',';
  return fnv1a64(os.str());
}

std::string artifact_header(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# tool: qpot " << kToolVersion << '\n'
     << "# config_fingerprint: " << hex64(cfg.fingerprint()) << '\n'
     << "# seed: " << cfg.seed << '\n'
     << "# system: " << cfg.system_id << '\n';
  return os.str();
}

}  // namespace qpot
