#pragma once

#include <cstddef>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/nn/tensor.hpp"

namespace selfplay {

// One learner-side episode. rewards are already curriculum-blended.
struct Trajectory {
  std::vector<RealVector> observations;
  std::vector<RealVector> raw_actions;
  std::vector<double> old_log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  bool terminal = true;

  std::size_t length() const { return rewards.size(); }

  void check() const {
    const auto t = rewards.size();
    require(t >= 1, "empty trajectory");
    require(observations.size() == t && raw_actions.size() == t && old_log_probs.size() == t && values.size() == t,
            "trajectory sequences differ in length");
  }
};

struct Batch {
  RealMatrix observations;  // N x obs_dim
  RealMatrix raw_actions;   // N x action_dim
  RealVector old_log_probs;
  RealVector values;
  RealVector advantages;
  RealVector returns;
  std::vector<std::size_t> boundaries;  // start offset of each source trajectory, plus N at the end

  std::size_t size() const { return static_cast<std::size_t>(advantages.size()); }
};

}  // namespace selfplay
