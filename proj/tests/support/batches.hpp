#pragma once

#include "evsched/replay.hpp"
#include "evsched/rng.hpp"

namespace evsched::testing {

/// Buffer of random transitions with actions inside [-6, 6].
inline ReplayBuffer random_buffer(Rng& rng, int state_dim, std::size_t count) {
  ReplayBuffer buf(count, state_dim);
  for (std::size_t i = 0; i < count; ++i) {
    Transition t;
    t.state.resize(static_cast<std::size_t>(state_dim));
    t.next_state.resize(static_cast<std::size_t>(state_dim));
    for (double& v : t.state) v = standard_normal(rng);
    for (double& v : t.next_state) v = standard_normal(rng);
    t.action = uniform(rng, -6.0, 6.0);
    t.reward = standard_normal(rng);
    t.cost = std::max(0.0, standard_normal(rng));
    t.done = uniform(rng, 0.0, 1.0) < 0.1;
    buf.push(t);
  }
  return buf;
}

}  // namespace evsched::testing
