#include "qpot/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace qpot {

void TrainConfig::validate() const {
  if (!(box.x1_max > box.x1_min) || !(box.x2_max > box.x2_min)) throw std::invalid_argument("training box is degenerate");
  if (raw_samples <= 0) throw std::invalid_argument("raw sample count must be positive");
  if (epochs < 0) throw std::invalid_argument("epoch count must be nonnegative");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (record_every <= 0) throw std::invalid_argument("record_every must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
  arch.validate();
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t train_fingerprint(const TrainConfig& cfg, const SystemSpec& sys, const NoiseParams& noise) {
  std::ostringstream os;
  os.precision(17);
  const auto& p = sys.params;
  os << "system=" << sys.id << ';' << p.rho << ',' << p.K << ',' << p.beta << ',' << p.x0 << ',' << p.alpha << ','
     << p.lambda << ',' << p.R << ";noise=" << noise.sigma1 << ',' << noise.sigma2 << ";box=" << cfg.box.x1_min << ','
     << cfg.box.x1_max << ',' << cfg.box.x2_min << ',' << cfg.box.x2_max << ";raw=" << cfg.raw_samples
     << ";lr=" << cfg.lr << ";l1=" << cfg.lambda1 << ";l2=" << cfg.lambda2 << ";delta=" << cfg.delta
     << ";seed=" << cfg.seed << ";arch=" << cfg.arch.hidden_layers << 'x' << cfg.arch.width;
  return fnv1a64(os.str());
}

CollocationSet sample_collocation(const TrainConfig& cfg, const Separatrix* sep) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u1(cfg.box.x1_min, cfg.box.x1_max);
  std::uniform_real_distribution<double> u2(cfg.box.x2_min, cfg.box.x2_max);
  std::vector<StateVec> kept;
  kept.reserve(static_cast<std::size_t>(cfg.raw_samples));
  for (int i = 0; i < cfg.raw_samples; ++i) {
    const double a = u1(rng);
    const StateVec x(a, u2(rng));
    if (!sep || basin_side(x, *sep) == BasinSide::Interior) kept.push_back(x);
  }
  if (kept.empty()) throw std::runtime_error("no collocation point lies in the basin; check the box");
  CollocationSet set;
  set.points.resize(2, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) set.points.col(static_cast<Eigen::Index>(i)) = kept[i];
  set.raw_count = cfg.raw_samples;
  set.retained_count = static_cast<int>(kept.size());
  set.seed = cfg.seed;
  return set;
}

double total_loss(const LossTerms& t, double lambda1, double lambda2) {
  return t.dyn + lambda1 * t.orth + lambda2 * t.zero;
}

DecompositionLoss::DecompositionLoss(SystemSpec sys, NoiseParams noise, StateVec reference, double delta,
                                     double lambda1, double lambda2)
    : sys_(std::move(sys)),
      noise_(noise),
      reference_(std::move(reference)),
      delta_(delta),
      lambda1_(lambda1),
      lambda2_(lambda2) {}

double DecompositionLoss::point_sum(const Eigen::Ref<const Eigen::Matrix2Xd>& x, const nn::BatchJets& jets,
                                    double weight, nn::BatchJets* adjoint) const {
  const LossTerms t = point_terms(x, jets, weight, adjoint);
  return t.dyn + lambda1_ * t.orth;
}

double DecompositionLoss::anchor_term(const nn::BatchJets& jets, nn::BatchJets* adjoint) const {
  // V = V-hat exactly at the reference point.
  const double v_ref = jets.value(0, 0);
  if (adjoint) adjoint->value(0, 0) = lambda2_ * 2.0 * v_ref;
  return lambda2_ * v_ref * v_ref;
}

LossTerms DecompositionLoss::point_terms(const Eigen::Ref<const Eigen::Matrix2Xd>& x, const nn::BatchJets& jets,
                                         double weight, nn::BatchJets* adjoint) const {
  double dyn = 0.0;
  double orth = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const StateVec xi = x.col(i);
    const Vec2 b = sys_.drift(xi);
    const Mat2 a = sys_.diffusion(xi, noise_);
    const Vec2 g(jets.d_dx1(0, i) + 2.0 * (xi(0) - reference_(0)), jets.d_dx2(0, i) + 2.0 * (xi(1) - reference_(1)));
    const Vec2 l(jets.value(1, i), jets.value(2, i));

    const Vec2 r = b + 0.5 * a * g - l;
    dyn += r.squaredNorm();

    const double s = g.dot(l);
    const double gg = g.squaredNorm();
    const double ll = l.squaredNorm();
    const double den = gg * ll + delta_;
    orth += s * s / den;

    if (adjoint) {
      const double c = 2.0 * s / den;
      const double c2 = 2.0 * s * s / (den * den);
      const Vec2 dg = weight * (a * r) + lambda1_ * weight * (c * l - c2 * ll * g);
      const Vec2 dl = -2.0 * weight * r + lambda1_ * weight * (c * g - c2 * gg * l);
      adjoint->d_dx1(0, i) = dg(0);
      adjoint->d_dx2(0, i) = dg(1);
      adjoint->value(1, i) = dl(0);
      adjoint->value(2, i) = dl(1);
    }
  }
  return {weight * dyn, weight * orth, 0.0};
}

LossTerms loss_terms(const nn::NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& pts, const SystemSpec& sys,
                     const NoiseParams& noise, const StateVec& reference, double delta) {
  if (pts.cols() == 0) throw std::invalid_argument("loss_terms needs a nonempty point set");
  const DecompositionLoss loss(sys, noise, reference, delta, 1.0, 1.0);
  const Eigen::Index n = pts.cols();
  const double weight = 1.0 / static_cast<double>(n);
  LossTerms t;
  for (Eigen::Index s = 0; s < n; s += nn::kLossChunk) {
    const auto x = pts.middleCols(s, std::min(nn::kLossChunk, n - s));
    const LossTerms c = loss.point_terms(x, nn::forward_batch(p, x), weight, nullptr);
    t.dyn += c.dyn;
    t.orth += c.orth;
  }
  const double v_ref = nn::forward_batch(p, reference).value(0, 0);
  t.zero = v_ref * v_ref;
  return t;
}

DivergenceError::DivergenceError(std::int64_t epoch, double loss)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(loss) +
                         ")"),
      epoch_(epoch) {}

TrainState initial_state(const TrainConfig& cfg) {
  TrainState s;
  s.params = nn::init_params(cfg.arch, cfg.seed);
  s.adam = nn::make_adam(s.params, cfg.lr);
  return s;
}

void train(const TrainConfig& cfg, const SystemSpec& sys, const NoiseParams& noise, const CollocationSet& pts,
           TrainState& state, const TrainHooks& hooks) {
  cfg.validate();
  if (pts.points.cols() == 0) throw std::invalid_argument("empty collocation set");
  if (!(state.params.arch() == cfg.arch)) throw nn::ShapeError("training state architecture differs from config");

  const DecompositionLoss loss(sys, noise, sys.reference_point, cfg.delta, cfg.lambda1, cfg.lambda2);

  // Rows at or past the resume point are recomputed.
  while (!state.history.empty() && state.history.back().epoch >= state.epoch) state.history.pop_back();

  for (;;) {
    const bool last = state.epoch >= cfg.epochs;
    if (last || state.epoch % cfg.record_every == 0) {
      const LossTerms t = loss_terms(state.params, pts.points, sys, noise, sys.reference_point, cfg.delta);
      state.history.push_back({state.epoch, t, total_loss(t, cfg.lambda1, cfg.lambda2)});
      if (hooks.on_record) hooks.on_record(state.history.back());
    }
    if (last) break;

    const nn::LossGradient lg = nn::loss_gradient(state.params, pts.points, loss);
    if (!std::isfinite(lg.value) || lg.value > 1e6) throw DivergenceError(state.epoch, lg.value);
    nn::adam_step(state.params, lg.gradient, state.adam);
    ++state.epoch;
    if (cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0 && state.epoch < cfg.epochs &&
        hooks.on_checkpoint) {
      hooks.on_checkpoint(state);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(state);
}

QuasipotentialModel bind_model(const nn::NetParams& p, const SystemSpec& sys, const NoiseParams& noise) {
  return QuasipotentialModel(p, sys.reference_point, sys, noise);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << header;
  out << "epoch,L_dyn,L_orth,L_0,total\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.terms.dyn << ',' << r.terms.orth << ',' << r.terms.zero << ',' << r.total << '\n';
  }
}

}  // namespace qpot
