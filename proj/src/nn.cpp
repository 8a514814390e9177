#include "evsched/nn.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace evsched {

DenseNet::DenseNet(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("DenseNet needs at least two layer sizes");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw std::invalid_argument("DenseNet layer sizes must be positive");
    }
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
  }
  params_ = Vector::Zero(total);
}

Eigen::Map<const Matrix> DenseNet::weights(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Vector> DenseNet::bias(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1],
          sizes_[l + 1]};
}

void DenseNet::init_uniform(Rng& rng, double output_scale) {
  for (int l = 0; l < layer_count(); ++l) {
    const auto fan_in = sizes_[static_cast<std::size_t>(l)];
    const auto fan_out = sizes_[static_cast<std::size_t>(l) + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double scale = l + 1 == layer_count() ? output_scale : 1.0;
    const Eigen::Index n = static_cast<Eigen::Index>(fan_in + 1) * fan_out;
    for (Eigen::Index i = 0; i < n; ++i) {
      params_[weight_offset(l) + i] = scale * uniform(rng, -bound, bound);
    }
  }
}

Matrix DenseNet::forward(const Matrix& inputs, Activations* cache) const {
  if (inputs.rows() != input_size()) {
    throw std::invalid_argument(
        fmt::format("DenseNet input has {} rows, expected {}", inputs.rows(), input_size()));
  }
  if (cache) {
    cache->inputs.resize(static_cast<std::size_t>(layer_count()));
    cache->pre.resize(static_cast<std::size_t>(layer_count()));
  }
  Matrix x = inputs;
  for (int l = 0; l < layer_count(); ++l) {
    Matrix z = weights(l) * x;
    z.colwise() += bias(l);
    if (cache) {
      cache->inputs[static_cast<std::size_t>(l)] = x;
      cache->pre[static_cast<std::size_t>(l)] = z;
    }
    if (l + 1 < layer_count()) {
      x = z.cwiseMax(0.0);
    } else {
      x = std::move(z);
    }
  }
  return x;
}

Vector DenseNet::forward(std::span<const double> input) const {
  const Eigen::Map<const Matrix> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return forward(Matrix(x)).col(0);
}

Matrix DenseNet::backward(const Activations& cache, const Matrix& upstream,
                          Vector* param_grad) const {
  if (upstream.rows() != output_size()) {
    throw std::invalid_argument(
        fmt::format("upstream has {} rows, expected {}", upstream.rows(), output_size()));
  }
  if (param_grad && param_grad->size() != param_count()) {
    throw std::invalid_argument("parameter gradient buffer has the wrong size");
  }
  Matrix delta = upstream;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    if (l + 1 < layer_count()) {
      delta.array() *= (cache.pre[li].array() > 0.0).cast<double>();
    }
    if (param_grad) {
      const Eigen::Index rows = sizes_[li + 1];
      const Eigen::Index cols = sizes_[li];
      Eigen::Map<Matrix> gw(param_grad->data() + weight_offset(l), rows, cols);
      Eigen::Map<Vector> gb(param_grad->data() + weight_offset(l) + rows * cols, rows);
      gw.noalias() += delta * cache.inputs[li].transpose();
      gb.noalias() += delta.rowwise().sum();
    }
    delta = weights(l).transpose() * delta;
  }
  return delta;
}

NetGradient backward(const DenseNet& net, std::span<const double> input,
                     std::span<const double> upstream) {
  if (static_cast<int>(input.size()) != net.input_size() ||
      static_cast<int>(upstream.size()) != net.output_size()) {
    throw std::invalid_argument("backward: shape mismatch");
  }
  Activations cache;
  const Eigen::Map<const Matrix> x(input.data(), net.input_size(), 1);
  net.forward(Matrix(x), &cache);
  const Eigen::Map<const Matrix> up(upstream.data(), net.output_size(), 1);
  NetGradient g{Vector::Zero(net.param_count()), Vector()};
  g.input = net.backward(cache, Matrix(up), &g.params).col(0);
  return g;
}

bool adam_step(Vector& params, const Vector& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) return false;
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
  return true;
}

void soft_update(Vector& target, const Vector& online, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument(fmt::format("soft update rate {} outside [0, 1]", eta));
  }
  if (target.size() != online.size()) throw std::invalid_argument("soft_update: shape mismatch");
  target = eta * online + (1.0 - eta) * target;
}

}  // namespace evsched
