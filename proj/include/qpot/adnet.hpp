#pragma once

#include "qpot/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qpot::nn {

/// Dense tanh network: 2 inputs, `hidden_layers` x `width` tanh units, three
/// identity outputs (V-hat, l1, l2).
struct NetArch {
  int inputs = 2;
  int hidden_layers = 6;
  int width = 20;
  int outputs = 3;

  /// Layer widths from input to output, e.g. {2, 20, ..., 20, 3}.
  std::vector<int> layer_sizes() const;
  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const NetArch&) const = default;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weights and biases stored in one flat vector. Layer k contributes its
/// weight matrix (rows = fan_out, column-major) followed by its bias.
class NetParams {
 public:
  NetParams() = default;
  explicit NetParams(const NetArch& arch);  // all zeros

  static NetParams from_flat(const NetArch& arch, std::span<const double> values);

  const NetArch& arch() const { return arch_; }
  int layer_count() const { return static_cast<int>(offsets_.size()); }
  std::size_t size() const { return static_cast<std::size_t>(theta_.size()); }

  const Eigen::VectorXd& flat() const { return theta_; }
  Eigen::VectorXd& flat() { return theta_; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;

 private:
  NetArch arch_;
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd theta_;
};

/// Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases.
NetParams init_params(const NetArch& arch, std::uint64_t seed);

struct NetOutput {
  double v;
  Vec2 l;
};

struct NetJet {
  double v;
  Vec2 l;
  Vec2 grad_v;
  Mat2 jac_l;  // jac_l(i, j) = d l_i / d x_j
};

NetOutput forward(const NetParams& p, const StateVec& x);

/// Outputs plus exact input derivatives (forward mode over the two inputs).
NetJet forward_with_input_grad(const NetParams& p, const StateVec& x);

/// Hessian of V-hat by central differences of the exact input gradient,
/// symmetrized.
Mat2 input_hessian(const NetParams& p, const StateVec& x, double h = 1e-4);

/// Outputs and their input derivatives for a batch of N points. Each member
/// is outputs x N.
struct BatchJets {
  Eigen::MatrixXd value;
  Eigen::MatrixXd d_dx1;
  Eigen::MatrixXd d_dx2;

  Eigen::Index size() const { return value.cols(); }
  static BatchJets zeros(int outputs, Eigen::Index n);
};

/// Activations cached by forward_batch for the reverse sweep, plus reusable
/// workspace. Each matrix holds [value | d/dx1 | d/dx2] column blocks.
class BatchTape {
 public:
  Eigen::Index n = 0;
  std::vector<Eigen::MatrixXd> activations;  // input of every layer, the network input first
  mutable Eigen::MatrixXd grad_out;
  mutable Eigen::MatrixXd grad_in;
};

BatchJets forward_batch(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& x, BatchTape* tape = nullptr);

/// Reverse sweep through the forward-mode augmented graph. `adjoint` holds
/// dL/d(value), dL/d(d_dx1), dL/d(d_dx2). Returns dL/dtheta in flat order.
Eigen::VectorXd backward_batch(const NetParams& p, const BatchTape& tape, const BatchJets& adjoint);

/// A loss of the form  weight * sum_i point_term(x_i) + anchor_term, where
/// the anchor term depends on the jets at fixed anchor points (e.g. pinning
/// V at a reference state). Separability lets the gradient be accumulated
/// over cache-sized column chunks.
class LossFunction {
 public:
  virtual ~LossFunction() = default;

  virtual Eigen::Matrix2Xd anchors() const { return {}; }

  /// weight * sum of per-point terms over the columns of `x`; writes the
  /// matching adjoint (same shape as `jets`) when non-null.
  virtual double point_sum(const Eigen::Ref<const Eigen::Matrix2Xd>& x, const BatchJets& jets, double weight,
                           BatchJets* adjoint) const = 0;

  /// Term over jets evaluated at anchors().
  virtual double anchor_term(const BatchJets&, BatchJets*) const { return 0.0; }
};

/// Columns per chunk in loss evaluation; keeps activations cache resident.
inline constexpr Eigen::Index kLossChunk = 128;

struct LossGradient {
  double value;
  Eigen::VectorXd gradient;
};

/// Mean-normalized loss (weight 1/N) and its exact parameter gradient.
/// Chunks are reduced in a fixed order, so the result is deterministic.
LossGradient loss_gradient(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& batch,
                           const LossFunction& loss);

double loss_value(const NetParams& p, const Eigen::Ref<const Eigen::Matrix2Xd>& batch, const LossFunction& loss);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

AdamState make_adam(const NetParams& p, double lr = 1e-3);

/// One bias-corrected Adam update in place.
void adam_step(NetParams& p, const Eigen::VectorXd& grad, AdamState& s);

}  // namespace qpot::nn
