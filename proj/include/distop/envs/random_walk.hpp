#pragma once

#include <vector>

#include "distop/common.hpp"

namespace distop::envs {

/// Uniform-random actions for n_episodes full episodes; counts the cell
/// occupied after every step.
template <class Env>
std::vector<long> random_walk_rollout(Env& env, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 0) throw InvalidArgument("n_episodes must be non-negative");
  Rng rng(seed);
  std::vector<long> hist(static_cast<std::size_t>(env.num_cells()), 0);
  for (int e = 0; e < n_episodes; ++e) {
    env.reset(rng);
    bool done = false;
    while (!done) {
      done = env.step(env.random_action(rng)).done;
      ++hist[static_cast<std::size_t>(env.cell_index())];
    }
  }
  return hist;
}

}  // namespace distop::envs
