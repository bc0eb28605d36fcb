#pragma once

#include <algorithm>
#include <utility>

#include "selfplay/env/game.hpp"
#include "selfplay/errors.hpp"

namespace selfplay {

inline constexpr double kWinReward = 1000.0;
inline constexpr double kDefenderBonus = 500.0;

// Terminal payoffs (agent 0, agent 1).
inline std::pair<double, double> competition_reward(GameKind kind, const Outcome& o) {
  if (!o.terminal()) throw ContractViolation("competition_reward on an ongoing episode");
  const double W = kWinReward;
  switch (kind) {
    case GameKind::RunToGoal:
    case GameKind::Sumo:
      if (o.kind == OutcomeKind::Draw) return {-W, -W};
      return o.winner == 0 ? std::pair{W, -W} : std::pair{-W, W};
    case GameKind::YouShallNotPass:
      // agent 0 runs, agent 1 blocks; time running out is a blocker win
      if (o.kind == OutcomeKind::Win && o.winner == 0) return {W, -W};
      return {-W, o.winner_standing ? W : 0.0};
    case GameKind::KickAndDefend:
      // agent 0 kicks, agent 1 defends
      if (o.kind == OutcomeKind::Win && o.winner == 0) return {W, -W};
      return {-W, W + (o.defender_touched_ball ? kDefenderBonus : 0.0) +
                      (o.defender_standing_at_end ? kDefenderBonus : 0.0)};
  }
  return {0.0, 0.0};
}

// r_t = alpha * s_t + (1 - alpha) * [t == T] * R
inline double blend_reward(double alpha, double dense, double competition, long t, long terminal_t) {
  return alpha * dense + (1.0 - alpha) * (t == terminal_t ? competition : 0.0);
}

// Never-annealed baseline: dense reward plus the competition reward.
inline double dense_plus_competition(double dense, double competition, long t, long terminal_t) {
  return dense + (t == terminal_t ? competition : 0.0);
}

inline double anneal_alpha(long iteration, long horizon) {
  require(horizon > 0, "anneal horizon must be positive");
  return std::max(0.0, 1.0 - static_cast<double>(iteration) / static_cast<double>(horizon));
}

// Randomisation level ramps linearly from kappa0 to 1 over `ramp` iterations.
inline double randomization_level(long iteration, double kappa0, long ramp) {
  require(kappa0 >= 0.0 && kappa0 <= 1.0, "kappa0 must lie in [0,1]");
  if (ramp <= 0) return 1.0;
  return std::min(1.0, kappa0 + (1.0 - kappa0) * static_cast<double>(iteration) / static_cast<double>(ramp));
}

struct CurriculumState {
  long iteration = 0;
  long anneal_horizon = 500;
  bool anneal = true;  // false: dense reward is never annealed away
  double alpha = 1.0;
  double kappa0 = 0.1;
  long randomization_ramp = 500;
  double kappa = 0.1;

  static CurriculumState at(long iteration, long anneal_horizon, bool anneal, double kappa0, long ramp) {
    CurriculumState c{iteration, anneal_horizon, anneal, 1.0, kappa0, ramp, 0.0};
    c.alpha = anneal ? anneal_alpha(iteration, anneal_horizon) : 1.0;
    c.kappa = randomization_level(iteration, kappa0, ramp);
    return c;
  }

  double reward(double dense, double competition, long t, long terminal_t) const {
    return anneal ? blend_reward(alpha, dense, competition, t, terminal_t)
                  : dense_plus_competition(dense, competition, t, terminal_t);
  }
};

}  // namespace selfplay
