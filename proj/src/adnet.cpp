#include "qpot/adnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace qpot::nn {

std::vector<int> NetArch::layer_sizes() const {
  std::vector<int> s;
  s.push_back(inputs);
  for (int i = 0; i < hidden_layers; ++i) s.push_back(width);
  s.push_back(outputs);
  return s;
}

std::size_t NetArch::parameter_count() const {
  const auto s = layer_sizes();
  std::size_t n = 0;
  for (std::size_t k = 1; k < s.size(); ++k) n += static_cast<std::size_t>(s[k]) * (s[k - 1] + 1);
  return n;
}

void NetArch::validate() const {
  if (inputs != 2 || outputs != 3) throw ShapeError("network must map 2 inputs to 3 outputs");
  if (hidden_layers < 0 || width <= 0) throw ShapeError("hidden layer count/width must be positive");
}

NetParams::NetParams(const NetArch& arch) : arch_(arch), sizes_(arch.layer_sizes()) {
  arch_.validate();
  std::size_t off = 0;
  for (std::size_t k = 1; k < sizes_.size(); ++k) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[k]) * (sizes_[k - 1] + 1);
  }
  theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

NetParams NetParams::from_flat(const NetArch& arch, std::span<const double> values) {
  NetParams p(arch);
  if (values.size() != p.size()) {
    throw ShapeError("flat parameter vector has " + std::to_string(values.size()) + " entries, architecture needs " +
                     std::to_string(p.size()));
  }
  p.theta_ = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return p;
}

std::size_t NetParams::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<std::size_t>(sizes_[layer + 1]) * sizes_[layer];
}

Eigen::Map<const Eigen::MatrixXd> NetParams::weight(int layer) const {
  return {theta_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<Eigen::MatrixXd> NetParams::weight(int layer) {
  return {theta_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<const Eigen::VectorXd> NetParams::bias(int layer) const {
  return {theta_.data() + bias_offset(layer), sizes_[layer + 1]};
}
Eigen::Map<Eigen::VectorXd> NetParams::bias(int layer) {
  return {theta_.data() + bias_offset(layer), sizes_[layer + 1]};
}

NetParams init_params(const NetArch& arch, std::uint64_t seed) {
  NetParams p(arch);
  std::mt19937_64 rng(seed);
  const auto sizes = arch.layer_sizes();
  for (int k = 0; k < p.layer_count(); ++k) {
    const double bound = std::sqrt(6.0 / (sizes[k] + sizes[k + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = p.weight(k);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  }
  return p;
}

BatchJets BatchJets::zeros(int outputs, Eigen::Index n) {
  return {Eigen::MatrixXd::Zero(outputs, n), Eigen::MatrixXd::Zero(outputs, n), Eigen::MatrixXd::Zero(outputs, n)};
}

namespace {

// tanh(z) = 1 - 2 / (exp(2z) + 1) with Eigen's vectorized exp; absolute
// error stays at the 1e-16 level and saturation needs no special case.
void tanh_inplace(Eigen::Ref<Eigen::MatrixXd> z) {
  z.array() = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}

}  // namespace

BatchJets forward_batch(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& x, BatchTape* tape) {
  BatchTape local;
  BatchTape& t = tape ? *tape : local;
  const Eigen::Index n = x.cols();
  const int layers = p.layer_count();
  t.n = n;
  t.activations.resize(static_cast<std::size_t>(layers));

  Eigen::MatrixXd& in = t.activations[0];
  in.resize(2, 3 * n);
  in.leftCols(n) = x;
  in.middleCols(n, n).row(0).setOnes();
  in.middleCols(n, n).row(1).setZero();
  in.rightCols(n).row(0).setZero();
  in.rightCols(n).row(1).setOnes();

  for (int k = 0; k + 1 < layers; ++k) {
    // Without a tape only two buffers are live at a time.
    Eigen::MatrixXd& h = tape ? t.activations[k + 1] : t.activations[(k + 1) % 2];
    const Eigen::MatrixXd& prev = tape ? t.activations[k] : t.activations[k % 2];
    h.resize(p.weight(k).rows(), 3 * n);
    h.noalias() = p.weight(k) * prev;
    h.leftCols(n).colwise() += p.bias(k);
    tanh_inplace(h.leftCols(n));
    const Eigen::Index rows = h.rows();
    double* val = h.data();
    double* d1 = val + rows * n;
    double* d2 = d1 + rows * n;
    for (Eigen::Index i = 0; i < rows * n; ++i) {
      const double s = 1.0 - val[i] * val[i];
      d1[i] *= s;
      d2[i] *= s;
    }
  }
  const int last = layers - 1;
  const Eigen::MatrixXd& prev = tape ? t.activations[last] : t.activations[last % 2];
  const Eigen::MatrixXd z = p.weight(last) * prev;
  BatchJets out;
  out.value = z.leftCols(n);
  out.value.colwise() += p.bias(last);
  out.d_dx1 = z.middleCols(n, n);
  out.d_dx2 = z.rightCols(n);
  return out;
}

Eigen::VectorXd backward_batch(const NetParams& p, const BatchTape& tape, const BatchJets& adjoint) {
  const Eigen::Index n = tape.n;
  const int layers = p.layer_count();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));

  Eigen::MatrixXd& gz = tape.grad_out;
  Eigen::MatrixXd& gh = tape.grad_in;
  gz.resize(adjoint.value.rows(), 3 * n);
  gz.leftCols(n) = adjoint.value;
  gz.middleCols(n, n) = adjoint.d_dx1;
  gz.rightCols(n) = adjoint.d_dx2;

  for (int k = layers - 1; k >= 0; --k) {
    const Eigen::MatrixXd& hin = tape.activations[k];
    const auto w = p.weight(k);
    Eigen::Map<Eigen::MatrixXd>(grad.data() + p.weight_offset(k), w.rows(), w.cols()).noalias() =
        gz * hin.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + p.bias_offset(k), w.rows()) = gz.leftCols(n).rowwise().sum();
    if (k == 0) break;

    // Adjoint of this layer's input, the previous tanh layer's [h | h'_1 | h'_2].
    // With h' = (1 - h^2) z', the value adjoint picks up -2 h (gh'_1 h'_1 + gh'_2 h'_2).
    gh.resize(w.cols(), 3 * n);
    gh.noalias() = w.transpose() * gz;
    const Eigen::Index m = gh.rows() * n;
    const double* h = hin.data();
    const double* h1 = h + m;
    const double* h2 = h1 + m;
    double* g = gh.data();
    double* g1 = g + m;
    double* g2 = g1 + m;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = 1.0 - h[i] * h[i];
      g[i] = s * g[i] - 2.0 * h[i] * (g1[i] * h1[i] + g2[i] * h2[i]);
      g1[i] *= s;
      g2[i] *= s;
    }
    gz.swap(gh);
  }
  return grad;
}

NetOutput forward(const NetParams& p, const StateVec& x) {
  // Shares the jet code path so value slots agree bit for bit.
  const NetJet j = forward_with_input_grad(p, x);
  return {j.v, j.l};
}

NetJet forward_with_input_grad(const NetParams& p, const StateVec& x) {
  const BatchJets j = forward_batch(p, x);
  NetJet out;
  out.v = j.value(0, 0);
  out.l = Vec2(j.value(1, 0), j.value(2, 0));
  out.grad_v = Vec2(j.d_dx1(0, 0), j.d_dx2(0, 0));
  out.jac_l << j.d_dx1(1, 0), j.d_dx2(1, 0), j.d_dx1(2, 0), j.d_dx2(2, 0);
  return out;
}

Mat2 input_hessian(const NetParams& p, const StateVec& x, double h) {
  Eigen::Matrix2Xd pts(2, 4);
  pts.col(0) = x + Vec2(h, 0.0);
  pts.col(1) = x - Vec2(h, 0.0);
  pts.col(2) = x + Vec2(0.0, h);
  pts.col(3) = x - Vec2(0.0, h);
  const BatchJets j = forward_batch(p, pts);
  Mat2 hess;
  hess(0, 0) = (j.d_dx1(0, 0) - j.d_dx1(0, 1)) / (2.0 * h);
  hess(1, 0) = (j.d_dx2(0, 0) - j.d_dx2(0, 1)) / (2.0 * h);
  hess(0, 1) = (j.d_dx1(0, 2) - j.d_dx1(0, 3)) / (2.0 * h);
  hess(1, 1) = (j.d_dx2(0, 2) - j.d_dx2(0, 3)) / (2.0 * h);
  return 0.5 * (hess + hess.transpose());
}

namespace {

double accumulate(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& batch, const LossFunction& loss,
                  Eigen::VectorXd* grad) {
  if (batch.cols() == 0) throw std::invalid_argument("loss needs a nonempty batch");
  const Eigen::Index n = batch.cols();
  const double weight = 1.0 / static_cast<double>(n);
  BatchTape tape;
  double value = 0.0;
  if (grad) *grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));

  const auto run = [&](const Eigen::Ref<const Eigen::Matrix2Xd>& x, bool anchor) {
    const BatchJets jets = forward_batch(p, x, grad ? &tape : nullptr);
    BatchJets adj;
    if (grad) adj = BatchJets::zeros(static_cast<int>(jets.value.rows()), jets.size());
    value += anchor ? loss.anchor_term(jets, grad ? &adj : nullptr)
                    : loss.point_sum(x, jets, weight, grad ? &adj : nullptr);
    if (grad) *grad += backward_batch(p, tape, adj);
  };
  for (Eigen::Index s = 0; s < n; s += kLossChunk) run(batch.middleCols(s, std::min(kLossChunk, n - s)), false);
  const Eigen::Matrix2Xd anchors = loss.anchors();
  if (anchors.cols() > 0) run(anchors, true);
  return value;
}

}  // namespace

LossGradient loss_gradient(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& batch,
                           const LossFunction& loss) {
  LossGradient out;
  out.value = accumulate(p, batch, loss, &out.gradient);
  return out;
}

double loss_value(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& batch, const LossFunction& loss) {
  return accumulate(p, batch, loss, nullptr);
}

AdamState make_adam(const NetParams& p, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  return s;
}

void adam_step(NetParams& p, const Eigen::VectorXd& grad, AdamState& s) {
  const auto n = static_cast<Eigen::Index>(p.size());
  if (grad.size() != n || s.m.size() != n || s.v.size() != n) {
    throw ShapeError("adam_step: gradient/moment shapes do not match the parameters");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  p.flat().array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.epsilon);
}

}  // namespace qpot::nn
