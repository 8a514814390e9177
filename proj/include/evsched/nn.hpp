#pragma once

// Dense feed-forward networks with exact reverse-mode gradients, Adam and
// soft target updates. Parameters live in one flat vector so optimizers,
// target mixing and checkpoints operate on a single array.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "evsched/rng.hpp"

namespace evsched {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Intermediate values of a batched forward pass, needed by backward().
struct Activations {
  std::vector<Matrix> inputs;  // input of every layer (column per sample)
  std::vector<Matrix> pre;     // pre-activation of every layer
};

/// Affine layers with ReLU between them and an identity output. Layer l maps
/// sizes[l] -> sizes[l+1]; its weights (column-major, out x in) are followed
/// by its bias in the flat parameter vector.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index param_count() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the output layer is
  /// additionally scaled by `output_scale`.
  void init_uniform(Rng& rng, double output_scale = 1.0);

  /// Batched forward; one sample per column.
  Matrix forward(const Matrix& inputs, Activations* cache = nullptr) const;
  Vector forward(std::span<const double> input) const;

  /// Reverse pass for the scalar sum(upstream .* output). Adds parameter
  /// gradients into `param_grad` (if non-null, sized param_count()) and
  /// returns the gradient w.r.t. the inputs.
  Matrix backward(const Activations& cache, const Matrix& upstream, Vector* param_grad) const;

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Map<const Matrix> weights(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

struct NetGradient {
  Vector params;
  Vector input;
};

/// Single-sample convenience wrapper around forward + backward.
NetGradient backward(const DenseNet& net, std::span<const double> input,
                     std::span<const double> upstream);

struct AdamState {
  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  Vector m;
  Vector v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam descent step. Returns false and leaves everything
/// untouched when the gradient contains a non-finite entry.
bool adam_step(Vector& params, const Vector& grads, AdamState& state, double lr);

/// target <- eta * online + (1 - eta) * target.
void soft_update(Vector& target, const Vector& online, double eta);

}  // namespace evsched
