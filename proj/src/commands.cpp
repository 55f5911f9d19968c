#include "qpot/commands.hpp"

#include "qpot/dynsys.hpp"
#include "qpot/exit.hpp"
#include "qpot/mc.hpp"
#include "qpot/paths.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace qpot {

namespace fs = std::filesystem;

namespace {

std::ofstream open_artifact(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  const auto path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  return out;
}

void write_polyline(std::ofstream& out, const std::vector<StateVec>& pts) {
  out << "x1,x2\n";
  for (const auto& p : pts) out << p(0) << ',' << p(1) << '\n';
}

}  // namespace

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  const SystemSpec sys = cfg.make_system_spec();
  const std::string header = artifact_header(cfg);

  const auto fps = find_fixed_points(cfg.system);
  {
    auto out = open_artifact(cfg, "fixed_points.csv");
    out << header << "x1,x2,kind,eig_re_1,eig_im_1,eig_re_2,eig_im_2\n";
    for (const auto& fp : fps) {
      out << fp.location(0) << ',' << fp.location(1) << ',' << to_string(fp.kind) << ',' << fp.eigenvalues[0].real()
          << ',' << fp.eigenvalues[0].imag() << ',' << fp.eigenvalues[1].real() << ',' << fp.eigenvalues[1].imag()
          << '\n';
    }
  }
  log << "fixed points: " << fps.size() << '\n';

  if (const auto bs = bistable_structure(cfg.system)) {
    const std::vector<StateVec> attractors{bs->bare.location, bs->vegetated.location};
    const Separatrix stable = stable_manifold(sys, bs->saddle, kSeparatrixBox, attractors);
    const Separatrix unstable = unstable_manifold(sys, bs->saddle, kSeparatrixBox, attractors);
    auto s = open_artifact(cfg, "separatrix.csv");
    s << header;
    write_polyline(s, stable.points());
    auto u = open_artifact(cfg, "unstable_manifold.csv");
    u << header;
    write_polyline(u, unstable.points());
    log << "separatrix: " << stable.points().size() << " points, unstable manifold: " << unstable.points().size()
        << " points\n";
  } else {
    log << "system is not bistable; no manifolds written\n";
  }

  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(1.0 + 0.005 * i);
  const auto rows = bifurcation_branch(grid, cfg.system);
  auto b = open_artifact(cfg, "bifurcation.csv");
  b << header << "R,x1,x2,kind,interior\n";
  for (const auto& r : rows) {
    b << r.R << ',' << r.location(0) << ',' << r.location(1) << ',' << to_string(r.kind) << ','
      << (r.interior ? 1 : 0) << '\n';
  }
  const SaddleNode sn = saddle_node_critical(cfg.system);
  log << "saddle-node critical rainfall R_c = " << std::setprecision(6) << sn.R << " at x1 = " << sn.x1 << '\n';
}

CollocationSet collocation_for(const RunConfig& cfg) {
  const SystemSpec sys = cfg.make_system_spec();
  if (sys.id == "vegetation") {
    const Separatrix sep = basin_separatrix(sys);
    return sample_collocation(cfg.train, &sep);
  }
  return sample_collocation(cfg.train, nullptr);
}

namespace {

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainState& s) {
  Checkpoint ck;
  ck.system_id = cfg.system_id;
  ck.system_params = cfg.system;
  ck.noise = cfg.noise;
  ck.config = cfg.train;
  ck.fingerprint = train_fingerprint(cfg.train, cfg.make_system_spec(), cfg.noise);
  ck.state = s;
  return ck;
}

void write_outputs(const RunConfig& cfg, const TrainedModel& tm, const CollocationSet& pts) {
  const std::string header = artifact_header(cfg);
  fs::create_directories(cfg.out_dir);
  write_history_csv((fs::path(cfg.out_dir) / "loss_history.csv").string(), tm.checkpoint.state.history, header);

  auto g = open_artifact(cfg, "field_grid.csv");
  g << header << "x1,x2,V,l1,l2,F\n";
  for (const auto& r : evaluate_grid(tm.model, cfg.train.box, 61, 21)) {
    g << r.x1 << ',' << r.x2 << ',' << r.V << ',' << r.l1 << ',' << r.l2 << ',' << r.F << '\n';
  }

  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["config_fingerprint"] = hex64(cfg.fingerprint());
  j["train_fingerprint"] = hex64(tm.checkpoint.fingerprint);
  j["seed"] = cfg.seed;
  j["system"] = cfg.system_id;
  j["epochs"] = tm.checkpoint.state.epoch;
  j["collocation_points"] = pts.retained_count;
  const auto& last = tm.checkpoint.state.history.back();
  j["final_loss"] = {{"L_dyn", last.terms.dyn}, {"L_orth", last.terms.orth}, {"L_0", last.terms.zero},
                     {"total", last.total}};
  j["V_reference"] = tm.model.V(tm.model.reference());
  if (const auto bs = bistable_structure(cfg.system); bs && cfg.system_id == "vegetation") {
    j["V_saddle"] = tm.model.V(bs->saddle.location);
  }
  auto s = open_artifact(cfg, "train_summary.json");
  s << j.dump(2) << '\n';
}

}  // namespace

TrainedModel cmd_train(const RunConfig& cfg, std::ostream& log) {
  const SystemSpec sys = cfg.make_system_spec();
  const CollocationSet pts = collocation_for(cfg);
  log << "collocation points: " << pts.retained_count << " of " << pts.raw_count << '\n';

  const std::string path = cfg.checkpoint_path();
  const std::uint64_t fp = train_fingerprint(cfg.train, sys, cfg.noise);
  TrainState state = initial_state(cfg.train);
  if (fs::exists(path)) {
    Checkpoint ck = load_checkpoint(path, fp, cfg.train.arch);
    if (ck.state.epoch <= cfg.train.epochs) {
      state = std::move(ck.state);
      log << "resuming from epoch " << state.epoch << '\n';
    }
  }
  fs::path dir = fs::path(path).parent_path();
  if (!dir.empty()) fs::create_directories(dir);

  TrainHooks hooks;
  hooks.on_checkpoint = [&](const TrainState& s) { save_checkpoint(path, make_checkpoint(cfg, s)); };
  hooks.on_record = [&](const HistoryRow& r) {
    if (r.epoch % 1000 == 0 || r.epoch == cfg.train.epochs) {
      log << "epoch " << r.epoch << "  loss " << std::scientific << std::setprecision(4) << r.total << "  (dyn "
          << r.terms.dyn << ", orth " << r.terms.orth << ", zero " << r.terms.zero << ")" << std::defaultfloat
          << std::endl;
    }
  };
  train(cfg.train, sys, cfg.noise, pts, state, hooks);

  TrainedModel tm{make_checkpoint(cfg, state), bind_model(state.params, sys, cfg.noise)};
  write_outputs(cfg, tm, pts);
  return tm;
}

std::optional<TrainedModel> load_trained(const RunConfig& cfg) {
  const std::string path = cfg.checkpoint_path();
  if (!fs::exists(path)) return std::nullopt;
  const SystemSpec sys = cfg.make_system_spec();
  Checkpoint ck = load_checkpoint(path, train_fingerprint(cfg.train, sys, cfg.noise), cfg.train.arch);
  if (ck.state.epoch < cfg.train.epochs) return std::nullopt;
  QuasipotentialModel m = bind_model(ck.state.params, sys, cfg.noise);
  return TrainedModel{std::move(ck), std::move(m)};
}

TrainedModel obtain_model(const RunConfig& cfg, std::ostream& log) {
  if (auto tm = load_trained(cfg)) return std::move(*tm);
  return cmd_train(cfg, log);
}

// Paths --------------------------------------------------------------------

namespace {

const BistableStructure& require_bistable(const std::optional<BistableStructure>& bs) {
  if (!bs) throw std::runtime_error("this command needs the bistable vegetation system");
  return *bs;
}

nlohmann::json point_json(const StateVec& x) { return {x(0), x(1)}; }

std::string eps_tag(double eps) {
  std::ostringstream s;
  s << eps;
  return s.str();
}

}  // namespace

void cmd_mpp(const RunConfig& cfg, const std::string& end, std::ostream& log) {
  const SystemSpec sys = cfg.make_system_spec();
  const TrainedModel tm = obtain_model(cfg, log);
  const QuasipotentialModel& m = tm.model;
  const std::string header = artifact_header(cfg);

  StateVec target;
  std::string tag;
  nlohmann::json j;
  if (end == "saddle") {
    target = require_bistable(bistable_structure(cfg.system)).saddle.location;
    tag = "saddle";
  } else if (end == "boundary") {
    const LineArgmin argmin = boundary_argmin_line(m, cfg.exit_line, cfg.train.box.x2_min, cfg.train.box.x2_max);
    target = argmin.point;
    tag = "boundary";
    j["boundary_argmin"] = {{"point", point_json(argmin.point)}, {"V", argmin.V}, {"at_endpoint", argmin.at_endpoint}};
    const LineShot oracle = shooting_line_minimum(sys, cfg.noise, cfg.exit_line);
    j["shooting_line_minimum"] = {{"point", point_json(oracle.hit)}, {"action", oracle.action}};
    log << "boundary minimum: learned (" << argmin.point(0) << ", " << argmin.point(1) << ") V = " << argmin.V
        << "; shooting (" << oracle.hit(0) << ", " << oracle.hit(1) << ") action = " << oracle.action << '\n';
  } else {
    const auto v = parse_eps_list(end);  // two positive numbers
    if (v.size() != 2) throw ConfigError("--end expects saddle, boundary or x1,x2");
    target = StateVec(v[0], v[1]);
    tag = "point";
  }

  const Path learned = mpp_reverse(m, target);
  const Path shot = shooting_mpp(sys, cfg.noise, target);
  fs::create_directories(cfg.out_dir);
  write_path_csv((fs::path(cfg.out_dir) / ("mpp_learned_" + tag + ".csv")).string(), learned, header);
  write_path_csv((fs::path(cfg.out_dir) / ("mpp_shooting_" + tag + ".csv")).string(), shot, header);

  const double v_end = m.V(target);
  const double distance = path_distance(learned, shot);
  const DipResult dip_learned = moisture_dip_check(learned);
  const DipResult dip_shot = moisture_dip_check(shot);
  j["tool_version"] = kToolVersion;
  j["config_fingerprint"] = hex64(cfg.fingerprint());
  j["seed"] = cfg.seed;
  j["system"] = cfg.system_id;
  j["end"] = point_json(target);
  j["hausdorff_distance"] = distance;
  j["learned"] = {{"action", learned.total_action()},
                  {"fw_action", fw_action(learned, sys, cfg.noise)},
                  {"V_end", v_end},
                  {"action_vs_V_rel", std::abs(learned.total_action() - v_end) / v_end},
                  {"samples", learned.size()},
                  {"start_gap", (learned.x.front() - m.reference()).norm()},
                  {"dip", dip_learned.dips},
                  {"min_x2", point_json(dip_learned.point)}};
  j["shooting"] = {{"action", shot.total_action()},
                   {"fw_action", fw_action(shot, sys, cfg.noise)},
                   {"miss", (shot.x.back() - target).norm()},
                   {"terminal_momentum", shot.p.back().norm()},
                   {"samples", shot.size()},
                   {"dip", dip_shot.dips},
                   {"min_x2", point_json(dip_shot.point)}};
  nlohmann::json profile = nlohmann::json::array();
  for (double x1 = 2.5; x1 <= 4.0 + 1e-12; x1 += 0.25) {
    const auto x2 = x2_at(learned, x1);
    if (x2) profile.push_back({x1, *x2});
  }
  j["learned_x2_profile"] = profile;
  auto out = open_artifact(cfg, "mpp_summary_" + tag + ".json");
  out << j.dump(2) << '\n';
  log << "learned action " << learned.total_action() << " (V = " << v_end << "), shooting action "
      << shot.total_action() << ", Hausdorff distance " << distance << ", moisture dip "
      << (dip_learned.dips ? "yes" : "no") << '\n';
}

// Exit times -----------------------------------------------------------------

namespace {

ExitCase exit_case_of(const RunConfig& cfg) { return cfg.exit_case == "b" ? ExitCase::B : ExitCase::A; }

struct McRun {
  double eps;
  McResult result;
};

std::vector<McRun> run_monte_carlo(const RunConfig& cfg, std::ostream& log) {
  const SystemSpec sys = cfg.make_system_spec();
  const ExitCase kind = exit_case_of(cfg);
  std::optional<ExitSpec> spec;
  if (kind == ExitCase::A) {
    spec = ExitSpec::line(cfg.exit_line);
  } else {
    const auto& bs = require_bistable(bistable_structure(cfg.system));
    spec = ExitSpec::separatrix(basin_separatrix(sys), bs.bare.location);
  }
  std::vector<McRun> runs;
  for (double eps : cfg.eps_grid) {
    NoiseParams noise = cfg.noise;
    noise.eps = eps;
    McRun r{eps, exit_ensemble(sys.reference_point, *spec, sys, noise, cfg.mc)};
    log << "eps " << eps << ": mean exit time " << r.result.mean << " [" << r.result.ci_low << ", "
        << r.result.ci_high << "], censored " << r.result.censored << '\n';
    runs.push_back(std::move(r));
  }
  return runs;
}

nlohmann::json mc_json(const McRun& r) {
  int captures = 0;
  for (auto t : r.result.triggers) captures += t == ExitSpec::Trigger::Capture ? 1 : 0;
  return {{"eps", r.eps},
          {"mean", r.result.mean},
          {"ci_low", r.result.ci_low},
          {"ci_high", r.result.ci_high},
          {"trajectories", r.result.times.size()},
          {"censored", r.result.censored},
          {"capture_fallbacks", captures},
          {"total_steps", r.result.total_steps}};
}

std::optional<double> mc_barrier(ExitCase kind, const std::vector<McRun>& runs) {
  std::vector<double> eps, times;
  for (const auto& r : runs) {
    eps.push_back(r.eps);
    times.push_back(r.result.mean);
  }
  if (eps.size() < 2) return std::nullopt;
  return barrier_from_times(kind, eps, times);
}

}  // namespace

void cmd_mc(const RunConfig& cfg, std::ostream& log) {
  const std::string header = artifact_header(cfg);
  const auto runs = run_monte_carlo(cfg, log);
  fs::create_directories(cfg.out_dir);
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["config_fingerprint"] = hex64(cfg.fingerprint());
  j["seed"] = cfg.seed;
  j["system"] = cfg.system_id;
  j["exit_case"] = cfg.exit_case;
  j["dt"] = cfg.mc.dt;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    write_exit_times_csv(
        (fs::path(cfg.out_dir) / ("exit_times_" + cfg.exit_case + "_eps" + eps_tag(r.eps) + ".csv")).string(),
        r.result, header);
    j["runs"].push_back(mc_json(r));
  }
  if (const auto b = mc_barrier(exit_case_of(cfg), runs)) j["barrier_estimate"] = *b;
  auto out = open_artifact(cfg, "mc_summary_" + cfg.exit_case + ".json");
  out << j.dump(2) << '\n';
}

void cmd_mfpt(const RunConfig& cfg, bool with_mc, std::ostream& log) {
  const TrainedModel tm = obtain_model(cfg, log);
  const QuasipotentialModel& m = tm.model;
  const ExitCase kind = exit_case_of(cfg);
  const ExitAsymptotics a = kind == ExitCase::A
                                ? case_a_asymptotics(m, cfg.exit_line, cfg.train.box)
                                : case_b_asymptotics(m, require_bistable(bistable_structure(cfg.system)).saddle);
  auto rows = mfpt_curve(a, cfg.eps_grid);

  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["config_fingerprint"] = hex64(cfg.fingerprint());
  j["seed"] = cfg.seed;
  j["system"] = cfg.system_id;
  j["exit_case"] = cfg.exit_case;
  j["exit_point"] = point_json(a.exit_point);
  j["barrier"] = a.barrier;
  j["V_reference"] = m.V(m.reference());
  j["f_integral"] = a.f_integral;
  if (kind == ExitCase::A) {
    j["mu_star"] = a.mu_star;
    j["det_h_star"] = a.det_h_star;
    j["prefactor_times_sqrt_eps"] = a.prefactor(1.0);
  } else {
    j["lambda_star"] = a.lambda_star;
    j["det_H_star"] = a.det_H_star;
    j["det_H_bar"] = a.det_H_bar;
    j["sqrt_det_ratio"] = std::sqrt(std::abs(a.det_H_star) / a.det_H_bar);
    j["prefactor"] = a.prefactor(1.0);
  }

  if (with_mc) {
    const auto runs = run_monte_carlo(cfg, log);
    j["mc"] = nlohmann::json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      rows[i].mc_mean = runs[i].result.mean;
      rows[i].mc_ci_low = runs[i].result.ci_low;
      rows[i].mc_ci_high = runs[i].result.ci_high;
      auto r = mc_json(runs[i]);
      r["ratio_to_asymptotic"] = runs[i].result.mean / rows[i].asymptotic;
      j["mc"].push_back(r);
    }
    if (const auto b = mc_barrier(kind, runs)) j["mc_barrier_estimate"] = *b;
  }
  j["table"] = nlohmann::json::array();
  for (const auto& r : rows) j["table"].push_back({{"eps", r.eps}, {"mfpt", r.asymptotic}});

  fs::create_directories(cfg.out_dir);
  write_mfpt_csv((fs::path(cfg.out_dir) / ("mfpt_table_" + cfg.exit_case + ".csv")).string(), rows,
                 artifact_header(cfg));
  auto out = open_artifact(cfg, "mfpt_summary_" + cfg.exit_case + ".json");
  out << j.dump(2) << '\n';
  for (const auto& r : rows) {
    log << "eps " << r.eps << ": asymptotic MFPT " << r.asymptotic;
    if (r.mc_mean) log << ", Monte Carlo " << *r.mc_mean;
    log << '\n';
  }
}

// Validation ------------------------------------------------------------------

namespace {

class Report {
 public:
  explicit Report(std::ostream& log) : log_(log) {}

  void check(const std::string& name, bool pass, const std::string& detail) {
    log_ << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all_ = all_ && pass;
  }

  /// Runs `body`, turning an exception into a failure of `name`.
  template <class F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(name, false, e.what());
    }
  }

  bool all() const { return all_; }

 private:
  std::ostream& log_;
  bool all_ = true;
};

std::string fmt_num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool default_vegetation(const RunConfig& cfg) {
  const SystemParams d;
  const auto& p = cfg.system;
  return cfg.system_id == "vegetation" && p.rho == d.rho && p.K == d.K && p.beta == d.beta && p.x0 == d.x0 &&
         p.alpha == d.alpha && p.lambda == d.lambda && p.R == d.R;
}

void network_independent_checks(const RunConfig& cfg, Report& rep) {
  const SystemSpec sys = cfg.make_system_spec();
  const bool defaults = default_vegetation(cfg);

  if (cfg.system_id == "vegetation") {
    rep.guarded("fixed_points", [&] {
      const auto fps = find_fixed_points(cfg.system);
      double worst = 0.0;
      for (const auto& fp : fps) worst = std::max(worst, sys.drift(fp.location).norm());
      bool ok = worst < 1e-10;
      std::string detail = std::to_string(fps.size()) + " points, max |b| " + fmt_num(worst);
      if (defaults) {
        const StateVec expect[] = {{0.0, 1.55}, {1.6667, 1.2917}, {4.6366, 0.9959}};
        ok = ok && fps.size() == 3;
        for (std::size_t i = 0; ok && i < 3; ++i) {
          ok = (fps[i].location - expect[i]).cwiseAbs().maxCoeff() <= 1e-3;
        }
      }
      rep.check("fixed_points", ok, detail);
    });
    if (defaults) {
      rep.guarded("saddle_node", [&] {
        const SaddleNode sn = saddle_node_critical(cfg.system);
        rep.check("saddle_node", near(sn.R, 1.4278, 1e-3), "R_c = " + fmt_num(sn.R));
      });
    }
    if (const auto bs = bistable_structure(cfg.system)) {
      rep.guarded("riccati_hessians", [&] {
        const Mat2 hbar = hessian_riccati(sys, cfg.noise, bs->vegetated.location);
        const Mat2 hstar = hessian_riccati(sys, cfg.noise, bs->saddle.location);
        const auto residual = [&](const Mat2& h, const StateVec& x) {
          const Mat2 q = -sys.jacobian(x);
          const Mat2 mi = h.inverse();
          return (mi * q.transpose() + q * mi - sys.diffusion(x, cfg.noise)).norm();
        };
        const double res = std::max(residual(hbar, bs->vegetated.location), residual(hstar, bs->saddle.location));
        bool ok = res < 1e-9 && hbar.determinant() > 0.0 && hstar.determinant() < 0.0;
        if (defaults && cfg.noise_case == "i") {
          Mat2 eb, es;
          eb << 0.0543, 0.0608, 0.0608, 2.9133;
          es << -0.0446, 0.4228, 0.4228, 1.3305;
          ok = ok && (hbar - eb).cwiseAbs().maxCoeff() <= 1e-3 && (hstar - es).cwiseAbs().maxCoeff() <= 1e-3 &&
               near(hbar.determinant(), 0.1546, 5e-4) && near(hstar.determinant(), -0.238, 1e-3);
        }
        rep.check("riccati_hessians", ok,
                  "det H_bar " + fmt_num(hbar.determinant()) + ", det H* " + fmt_num(hstar.determinant()) +
                      ", residual " + fmt_num(res));
      });
      rep.guarded("saddle_eigenvalue", [&] {
        const double lam = unstable_eigenvalue(sys, bs->saddle.location);
        rep.check("saddle_eigenvalue", lam > 0.0 && (!defaults || near(lam, 0.3721, 1e-3)), "lambda* = " + fmt_num(lam));
      });
    }
  }

  rep.guarded("input_gradients", [&] {
    const nn::NetParams p = nn::init_params(cfg.train.arch, cfg.seed);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const StateVec x(u(rng), u(rng));
      const nn::NetJet jet = nn::forward_with_input_grad(p, x);
      for (int d = 0; d < 2; ++d) {
        const double h = 1e-5;
        StateVec xp = x, xm = x;
        xp(d) += h;
        xm(d) -= h;
        const nn::NetOutput op = nn::forward(p, xp), om = nn::forward(p, xm);
        const Eigen::Vector3d fd((op.v - om.v) / (2 * h), (op.l(0) - om.l(0)) / (2 * h), (op.l(1) - om.l(1)) / (2 * h));
        const Eigen::Vector3d ex(jet.grad_v(d), jet.jac_l(0, d), jet.jac_l(1, d));
        worst = std::max(worst, (fd - ex).norm() / std::max(1e-8, ex.norm()));
      }
    }
    rep.check("input_gradients", worst <= 1e-6, "max relative error " + fmt_num(worst));
  });

  rep.guarded("parameter_gradients", [&] {
    const nn::NetParams p = nn::init_params(cfg.train.arch, cfg.seed + 1);
    Eigen::Matrix2Xd pts(2, 64);
    std::mt19937_64 rng(cfg.seed + 2);
    const Box& b = cfg.train.box;
    std::uniform_real_distribution<double> u1(b.x1_min, b.x1_max), u2(b.x2_min, b.x2_max);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) pts.col(i) = StateVec(u1(rng), u2(rng));
    const DecompositionLoss loss(sys, cfg.noise, sys.reference_point, cfg.train.delta, cfg.train.lambda1,
                                 cfg.train.lambda2);
    const nn::LossGradient lg = nn::loss_gradient(p, pts, loss);
    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = pick(rng);
      const double h = 1e-6;
      nn::NetParams pp = p, pm = p;
      pp.flat()(i) += h;
      pm.flat()(i) -= h;
      const double fd = (nn::loss_value(pp, pts, loss) - nn::loss_value(pm, pts, loss)) / (2 * h);
      worst = std::max(worst, std::abs(fd - lg.gradient(i)) / std::max(1e-6, std::abs(lg.gradient(i))));
    }
    rep.check("parameter_gradients", worst <= 1e-5, "max relative error " + fmt_num(worst));
  });

  rep.guarded("ou_surrogate", [&] {
    const SystemSpec ou = ou_system();
    const NoiseParams n{1.0, 1.0, cfg.noise.eps};
    const nn::NetParams zero(cfg.train.arch);
    const QuasipotentialModel m(zero, ou.reference_point, ou, n);
    Eigen::Matrix2Xd pts(2, 25);
    for (int i = 0; i < 25; ++i) pts.col(i) = StateVec(-1.0 + 0.5 * (i % 5), -1.0 + 0.5 * (i / 5));
    const LossTerms t = loss_terms(zero, pts, ou, n, ou.reference_point, cfg.train.delta);
    double fmax = 0.0, verr = 0.0;
    for (int i = 0; i < 25; ++i) {
      fmax = std::max(fmax, std::abs(m.F(pts.col(i))));
      verr = std::max(verr, std::abs(m.V(pts.col(i)) - pts.col(i).squaredNorm()));
    }
    const double total = total_loss(t, cfg.train.lambda1, cfg.train.lambda2);
    rep.check("ou_surrogate", total < 1e-20 && fmax < 1e-12 && verr < 1e-12,
              "loss " + fmt_num(total) + ", max |F| " + fmt_num(fmax));
  });

  rep.guarded("ou_shooting", [&] {
    const SystemSpec ou = ou_system();
    const NoiseParams n{1.0, 1.0, cfg.noise.eps};
    const Path p = shooting_mpp(ou, n, StateVec(1.0, 0.0));
    rep.check("ou_shooting", near(p.total_action(), 1.0, 1e-3), "action " + fmt_num(p.total_action()));
  });
}

void trained_checks(const RunConfig& cfg, Report& rep) {
  const SystemSpec sys = cfg.make_system_spec();
  const std::string path = cfg.checkpoint_path();
  std::optional<Checkpoint> ck;
  try {
    ck = load_checkpoint(path, train_fingerprint(cfg.train, sys, cfg.noise), cfg.train.arch);
    rep.check("checkpoint_load", true, path + " at epoch " + std::to_string(ck->state.epoch));
  } catch (const std::exception& e) {
    rep.check("checkpoint_load", false, e.what());
    return;
  }
  rep.check("checkpoint_finite", ck->state.params.flat().allFinite(), "network parameters finite");
  if (ck->state.history.empty()) {
    rep.check("checkpoint_loss_consistency", false, "no loss history recorded");
    return;
  }
  const HistoryRow& last = ck->state.history.back();
  const bool complete = ck->state.epoch >= cfg.train.epochs && last.epoch == ck->state.epoch;
  rep.check("checkpoint_complete", complete,
            "epoch " + std::to_string(ck->state.epoch) + " of " + std::to_string(cfg.train.epochs));
  if (!complete) return;
  rep.guarded("checkpoint_loss_consistency", [&] {
    const CollocationSet pts = collocation_for(cfg);
    const LossTerms t = loss_terms(ck->state.params, pts.points, sys, cfg.noise, sys.reference_point, cfg.train.delta);
    const double total = total_loss(t, cfg.train.lambda1, cfg.train.lambda2);
    const double rel = std::abs(total - last.total) / std::max(1e-300, std::abs(last.total));
    rep.check("checkpoint_loss_consistency", rel <= 1e-9,
              "recomputed " + fmt_num(total) + " vs recorded " + fmt_num(last.total));
  });
  const QuasipotentialModel m = bind_model(ck->state.params, sys, cfg.noise);
  rep.guarded("trained_reference_value", [&] {
    const double v = m.V(m.reference());
    rep.check("trained_reference_value", std::abs(v) <= 1e-2, "V(reference) = " + fmt_num(v));
  });
  if (const auto bs = bistable_structure(cfg.system); bs && cfg.system_id == "vegetation") {
    rep.guarded("trained_saddle_value", [&] {
      const double v = m.V(bs->saddle.location);
      rep.check("trained_saddle_value", v > 0.0, "V(saddle) = " + fmt_num(v));
    });
  }
}

}  // namespace

bool cmd_validate(const RunConfig& cfg, bool include_trained, std::ostream& log) {
  Report rep(log);
  network_independent_checks(cfg, rep);
  if (include_trained) trained_checks(cfg, rep);
  log << (rep.all() ? "all checks passed" : "some checks failed") << '\n';
  return rep.all();
}

}  // namespace qpot
