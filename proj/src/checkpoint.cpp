#include "qpot/trainer.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace qpot {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const auto& c = ck.config;
  const auto& s = ck.state;
  json j;
  j["version"] = kCheckpointVersion;
  j["fingerprint"] = hex64(ck.fingerprint);
  j["arch"] = {{"inputs", c.arch.inputs},
               {"hidden_layers", c.arch.hidden_layers},
               {"width", c.arch.width},
               {"outputs", c.arch.outputs}};
  j["system"] = {{"id", ck.system_id},
                 {"rho", ck.system_params.rho},
                 {"K", ck.system_params.K},
                 {"beta", ck.system_params.beta},
                 {"x0", ck.system_params.x0},
                 {"alpha", ck.system_params.alpha},
                 {"lambda", ck.system_params.lambda},
                 {"R", ck.system_params.R}};
  j["noise"] = {{"sigma1", ck.noise.sigma1}, {"sigma2", ck.noise.sigma2}, {"eps", ck.noise.eps}};
  j["config"] = {{"box", {c.box.x1_min, c.box.x1_max, c.box.x2_min, c.box.x2_max}},
                 {"raw_samples", c.raw_samples},
                 {"epochs", c.epochs},
                 {"lr", c.lr},
                 {"lambda1", c.lambda1},
                 {"lambda2", c.lambda2},
                 {"delta", c.delta},
                 {"seed", c.seed},
                 {"checkpoint_every", c.checkpoint_every},
                 {"record_every", c.record_every}};
  j["epoch"] = s.epoch;
  j["params"] = vec_to_json(s.params.flat());
  j["adam"] = {{"lr", s.adam.lr},
               {"beta1", s.adam.beta1},
               {"beta2", s.adam.beta2},
               {"epsilon", s.adam.epsilon},
               {"step", s.adam.step},
               {"m", vec_to_json(s.adam.m)},
               {"v", vec_to_json(s.adam.v)}};
  json hist = json::array();
  for (const auto& r : s.history) hist.push_back({r.epoch, r.terms.dyn, r.terms.orth, r.terms.zero, r.total});
  j["history"] = std::move(hist);

  // Write then rename so an interrupted save never clobbers the last good file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
    out << j.dump(1) << '\n';
    if (!out) throw CheckpointError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path + ": " + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ck;
    ck.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);

    auto& c = ck.config;
    const auto& ja = j.at("arch");
    c.arch.inputs = ja.at("inputs").get<int>();
    c.arch.hidden_layers = ja.at("hidden_layers").get<int>();
    c.arch.width = ja.at("width").get<int>();
    c.arch.outputs = ja.at("outputs").get<int>();
    c.arch.validate();

    const auto& js = j.at("system");
    ck.system_id = js.at("id").get<std::string>();
    auto& sp = ck.system_params;
    sp.rho = js.at("rho");
    sp.K = js.at("K");
    sp.beta = js.at("beta");
    sp.x0 = js.at("x0");
    sp.alpha = js.at("alpha");
    sp.lambda = js.at("lambda");
    sp.R = js.at("R");

    const auto& jn = j.at("noise");
    ck.noise.sigma1 = jn.at("sigma1");
    ck.noise.sigma2 = jn.at("sigma2");
    ck.noise.eps = jn.at("eps");

    const auto& jc = j.at("config");
    const auto box = jc.at("box").get<std::vector<double>>();
    if (box.size() != 4) throw CheckpointError("config.box must have 4 entries");
    c.box = {box[0], box[1], box[2], box[3]};
    c.raw_samples = jc.at("raw_samples");
    c.epochs = jc.at("epochs");
    c.lr = jc.at("lr");
    c.lambda1 = jc.at("lambda1");
    c.lambda2 = jc.at("lambda2");
    c.delta = jc.at("delta");
    c.seed = jc.at("seed");
    c.checkpoint_every = jc.at("checkpoint_every");
    c.record_every = jc.at("record_every");

    auto& s = ck.state;
    s.epoch = j.at("epoch");
    const auto flat = j.at("params").get<std::vector<double>>();
    s.params = nn::NetParams::from_flat(c.arch, flat);

    const auto& jad = j.at("adam");
    s.adam.lr = jad.at("lr");
    s.adam.beta1 = jad.at("beta1");
    s.adam.beta2 = jad.at("beta2");
    s.adam.epsilon = jad.at("epsilon");
    s.adam.step = jad.at("step");
    s.adam.m = json_to_vec(jad.at("m"));
    s.adam.v = json_to_vec(jad.at("v"));
    if (s.adam.m.size() != static_cast<Eigen::Index>(s.params.size()) ||
        s.adam.v.size() != static_cast<Eigen::Index>(s.params.size())) {
      throw CheckpointError("Adam moments do not match the parameter count");
    }
    for (const auto& r : j.at("history")) {
      s.history.push_back({r.at(0).get<std::int64_t>(), {r.at(1), r.at(2), r.at(3)}, r.at(4)});
    }
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path + ": " + e.what());
  } catch (const nn::ShapeError& e) {
    throw CheckpointError("checkpoint " + path + " is inconsistent: " + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_fingerprint, const nn::NetArch& arch) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.config.arch == arch)) throw CheckpointError("checkpoint architecture does not match the requested one");
  if (ck.fingerprint != expected_fingerprint) {
    throw CheckpointError("checkpoint fingerprint " + hex64(ck.fingerprint) + " does not match expected " +
                          hex64(expected_fingerprint));
  }
  return ck;
}

}  // namespace qpot
