#pragma once

// Tanh-squashed Gaussian policy over one continuous action (kWh per hour).

#include <span>
#include <vector>

#include "evsched/nn.hpp"

namespace evsched {

inline constexpr double kSquashEps = 1e-6;

/// Affine map from the squashed range (-1, 1) to [low, high] kWh.
struct ActionScale {
  double scale = 1.0;
  double offset = 0.0;

  static ActionScale from_bounds(double low, double high) {
    return {0.5 * (high - low), 0.5 * (high + low)};
  }
  double low() const { return offset - scale; }
  double high() const { return offset + scale; }
  double to_action(double squashed) const { return scale * squashed + offset; }
  double to_unit(double action) const { return (action - offset) / scale; }
};

struct SquashedSample {
  double action = 0.0;    // kWh
  double squashed = 0.0;  // tanh(u), in (-1, 1)
  double log_prob = 0.0;
  double mean = 0.0;
  double log_std = 0.0;
};

/// Log-density of the squashed action given the pre-squash mean/log-std and
/// noise draw.
double squashed_log_prob(double noise, double log_std, double squashed, double scale);

class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, const std::vector<int>& hidden, ActionScale scale,
                 double log_std_min = -20.0, double log_std_max = 2.0);

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  const ActionScale& action_scale() const { return scale_; }
  double log_std_min() const { return log_std_min_; }
  double log_std_max() const { return log_std_max_; }
  double clamp_log_std(double raw) const;

  /// Backbone init with a small output layer so early actions hover near 0.
  void init(Rng& rng, double output_scale = 0.01) { net_.init_uniform(rng, output_scale); }

  /// u = mean + std * noise; action = scale * tanh(u) + offset.
  SquashedSample sample(std::span<const double> obs, double noise) const;
  /// Mode of the squashed mean (noise = 0).
  double deterministic_action(std::span<const double> obs) const;
  /// Density of an arbitrary action; boundary actions are nudged inward.
  double log_prob(std::span<const double> obs, double action) const;

 private:
  DenseNet net_;
  ActionScale scale_;
  double log_std_min_ = -20.0;
  double log_std_max_ = 2.0;
};

}  // namespace evsched
