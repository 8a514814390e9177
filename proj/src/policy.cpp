#include "evsched/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evsched {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

double squashed_log_prob(double noise, double log_std, double squashed, double scale) {
  return -0.5 * noise * noise - log_std - kHalfLog2Pi -
         std::log(1.0 - squashed * squashed + kSquashEps) - std::log(scale);
}

GaussianPolicy::GaussianPolicy(int obs_dim, const std::vector<int>& hidden, ActionScale scale,
                               double log_std_min, double log_std_max)
    : scale_(scale), log_std_min_(log_std_min), log_std_max_(log_std_max) {
  if (!(scale.scale > 0.0)) throw std::invalid_argument("action scale must be positive");
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("bad log-std clamp range");
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2);
  net_ = DenseNet(std::move(sizes));
}

double GaussianPolicy::clamp_log_std(double raw) const {
  return std::clamp(raw, log_std_min_, log_std_max_);
}

SquashedSample GaussianPolicy::sample(std::span<const double> obs, double noise) const {
  const Vector out = net_.forward(obs);
  SquashedSample s;
  s.mean = out[0];
  s.log_std = clamp_log_std(out[1]);
  const double u = s.mean + std::exp(s.log_std) * noise;
  s.squashed = std::tanh(u);
  s.action = scale_.to_action(s.squashed);
  s.log_prob = squashed_log_prob(noise, s.log_std, s.squashed, scale_.scale);
  return s;
}

double GaussianPolicy::deterministic_action(std::span<const double> obs) const {
  const Vector out = net_.forward(obs);
  return scale_.to_action(std::tanh(out[0]));
}

double GaussianPolicy::log_prob(std::span<const double> obs, double action) const {
  const Vector out = net_.forward(obs);
  const double mean = out[0];
  const double log_std = clamp_log_std(out[1]);
  const double y = std::clamp(scale_.to_unit(action), -1.0 + kSquashEps, 1.0 - kSquashEps);
  const double u = std::atanh(y);
  const double noise = (u - mean) / std::exp(log_std);
  return squashed_log_prob(noise, log_std, y, scale_.scale);
}

}  // namespace evsched
