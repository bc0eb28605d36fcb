#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/ppo/trajectory.hpp"

namespace selfplay {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Full-rollout GAE with V(s_T) = 0: every trajectory ends by termination.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                             double lambda) {
  require(!rewards.empty(), "compute_gae: empty trajectory");
  require(rewards.size() == values.size(), "compute_gae: rewards/values length mismatch");
  const std::size_t n = rewards.size();
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : 0.0;
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

inline GaeResult compute_gae(const Trajectory& traj, double gamma, double lambda) {
  require(traj.length() >= 1, "compute_gae: empty trajectory");
  return compute_gae(traj.rewards, traj.values, gamma, lambda);
}

// Zero mean, unit (population) std. A constant vector maps to all zeros.
inline void standardize(RealVector& v) {
  if (v.size() == 0) return;
  const double mean = v.mean();
  v.array() -= mean;
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd < 1e-12) {
    v.setZero();
    return;
  }
  v /= sd;
}

inline Batch assemble_batch(std::span<const Trajectory> trajs, double gamma, double lambda, bool standardize_adv) {
  std::size_t n = 0;
  for (const auto& t : trajs) {
    t.check();
    n += t.length();
  }
  require(n > 0, "assemble_batch: no steps");
  const auto obs_dim = trajs.front().observations.front().size();
  const auto act_dim = trajs.front().raw_actions.front().size();
  Batch b;
  b.observations.resize(n, obs_dim);
  b.raw_actions.resize(n, act_dim);
  b.old_log_probs.resize(n);
  b.values.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  std::size_t row = 0;
  for (const auto& t : trajs) {
    b.boundaries.push_back(row);
    const auto g = compute_gae(t, gamma, lambda);
    for (std::size_t i = 0; i < t.length(); ++i, ++row) {
      require(t.observations[i].size() == obs_dim && t.raw_actions[i].size() == act_dim,
              "assemble_batch: inconsistent dims");
      b.observations.row(row) = t.observations[i].transpose();
      b.raw_actions.row(row) = t.raw_actions[i].transpose();
      b.old_log_probs(row) = t.old_log_probs[i];
      b.values(row) = t.values[i];
      b.advantages(row) = g.advantages[i];
      b.returns(row) = g.returns[i];
    }
  }
  b.boundaries.push_back(n);
  if (standardize_adv) standardize(b.advantages);
  return b;
}

}  // namespace selfplay
