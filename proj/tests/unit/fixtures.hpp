#pragma once

#include "bipmixed/model.hpp"
#include "bipmixed/simulation.hpp"

namespace fixture {

/// 4 sites x 5 families x 2 members, two 20-feature views with 10 signal features.
inline bipmixed::ScenarioSpec small_spec(int scenario = 2, std::uint64_t seed = 9) {
  auto spec = bipmixed::ScenarioSpec::preset(scenario);
  spec.n_sites = 4;
  spec.families_per_site = 5;
  spec.n_views = 2;
  spec.p = 20;
  spec.n_signal = 10;
  spec.seed = seed;
  return spec;
}

inline bipmixed::Hyperparameters short_chain(std::uint64_t seed = 3) {
  bipmixed::Hyperparameters h;
  h.n_iter = 200;
  h.n_burn = 100;
  h.seed = seed;
  return h;
}

}  // namespace fixture
