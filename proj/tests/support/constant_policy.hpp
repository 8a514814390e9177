#pragma once

#include "evsched/policy.hpp"

namespace evsched::testing {

/// A policy whose head ignores the observation: mean and log-std come from
/// the output bias alone.
inline GaussianPolicy constant_policy(double mean, double log_std) {
  GaussianPolicy pi(1, {}, ActionScale::from_bounds(-6.0, 6.0));
  pi.net().params().setZero();
  pi.net().params()[pi.net().param_count() - 2] = mean;
  pi.net().params()[pi.net().param_count() - 1] = log_std;
  return pi;
}

}  // namespace evsched::testing
