#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfplay/env/physics.hpp"
#include "selfplay/errors.hpp"
#include "selfplay/nn/tensor.hpp"
#include "selfplay/util/random.hpp"

namespace selfplay {

enum class GameKind { RunToGoal, YouShallNotPass, Sumo, KickAndDefend };

inline std::string_view game_name(GameKind k) {
  switch (k) {
    case GameKind::RunToGoal: return "run-to-goal";
    case GameKind::YouShallNotPass: return "you-shall-not-pass";
    case GameKind::Sumo: return "sumo";
    case GameKind::KickAndDefend: return "kick-and-defend";
  }
  return "?";
}

inline GameKind game_kind_from_name(std::string_view s) {
  for (auto k : {GameKind::RunToGoal, GameKind::YouShallNotPass, GameKind::Sumo, GameKind::KickAndDefend})
    if (game_name(k) == s) return k;
  throw ConfigError("unknown environment '" + std::string(s) + "'");
}

inline bool is_symmetric(GameKind k) { return k == GameKind::RunToGoal || k == GameKind::Sumo; }

enum class OutcomeKind { Ongoing, Win, Draw };

struct Outcome {
  OutcomeKind kind = OutcomeKind::Ongoing;
  int winner = -1;
  // you-shall-not-pass: blocker standing when it wins on time
  bool winner_standing = true;
  // kick-and-defend only
  bool defender_touched_ball = false;
  bool defender_standing_at_end = false;
  bool defender_area_violation = false;

  bool terminal() const { return kind != OutcomeKind::Ongoing; }
  static Outcome win(int agent) { return Outcome{OutcomeKind::Win, agent}; }
  static Outcome draw() { return Outcome{OutcomeKind::Draw, -1}; }
};

struct StepResult {
  std::array<RealVector, 2> observations;
  std::array<double, 2> exploration_reward{0.0, 0.0};
  bool done = false;
  Outcome outcome;
};

// Geometry, reward weights and randomisation ranges for all four games.
struct GameConfig {
  PhysicsConfig physics;
  int horizon = 500;
  // run-to-goal / you-shall-not-pass
  double start_offset = 2.0;
  double goal_distance = 5.0;
  double corridor_half_width = 3.0;
  // sumo
  double sumo_start_offset = 1.5;
  double arena_radius = 5.0;
  // kick-and-defend
  double goal_x = 5.0;
  double goal_half_width = 3.0;
  double keeper_depth = 3.0;
  double field_length = 14.0;
  double field_half_width = 6.0;
  double ball_offset = 5.0;      // nominal ball distance in front of the goal line
  double kicker_offset = 8.0;    // nominal kicker distance in front of the goal line
  double defender_offset = 1.5;  // nominal defender distance in front of the goal line
  // dense reward weights
  double alive_bonus = 5.0;
  double control_cost = 0.1;
  // reset jitter at kappa = 1
  double position_jitter = 1.0;
  double arena_jitter = 1.0;
  double ball_jitter = 2.0;
};

// Observation layout, version 1 (all vectors in the observer's frame; agent 1's
// frame is the world rotated by 180 degrees):
//   [0,2)  own position      [2,4) own velocity      [4] own upright
//   [5,7)  opponent pos - own pos                     [7,9) opponent vel - own vel
//   [9]    opponent upright
//   [10]   context a  [11] context b (opponent-derived)  [12] time remaining fraction
//   kick-and-defend adds the ball block:
//   [13,15) ball - own pos  [15,17) ball velocity  [17] |ball x - goal x|
//   [18,20) ball - left post  [20,22) ball - right post
inline constexpr int kObsLayoutVersion = 1;
inline constexpr std::size_t kBaseObsDim = 13;
inline constexpr std::size_t kBallObsDim = 9;

class MarkovGame {
 public:
  MarkovGame(GameKind kind, GameConfig cfg) : kind_(kind), cfg_(std::move(cfg)) {}
  virtual ~MarkovGame() = default;

  GameKind kind() const { return kind_; }
  std::string_view name() const { return game_name(kind_); }
  const GameConfig& config() const { return cfg_; }
  bool symmetric() const { return is_symmetric(kind_); }
  std::size_t action_dim() const { return 2; }
  int horizon() const { return cfg_.horizon; }
  virtual std::size_t obs_dim() const { return kBaseObsDim; }
  virtual std::array<std::string, 2> role_names() const { return {"agent0", "agent1"}; }
  // Indices of observation entries describing the opponent.
  std::vector<std::size_t> opponent_feature_indices() const { return {5, 6, 7, 8, 9, 11}; }

  std::array<RealVector, 2> reset(Rng& rng, double kappa) {
    require(kappa >= 0.0 && kappa <= 1.0, "randomization level must lie in [0,1]");
    state_ = randomize_reset(rng, kappa);
    done_ = false;
    touched_ = false;
    outcome_ = Outcome{};
    return {observe(0), observe(1)};
  }

  // Nominal layout jittered uniformly by +-kappa * (max jitter).
  virtual WorldState randomize_reset(Rng& rng, double kappa) const = 0;

  StepResult step(const std::array<RealVector, 2>& clipped_actions) {
    if (done_) throw ContractViolation(std::string(name()) + ": step after terminal");
    std::array<Vec2, 2> forces;
    for (int i = 0; i < 2; ++i) {
      require(clipped_actions[i].size() == 2, "action must be 2-dimensional");
      const Vec2 a = clipped_actions[i].cwiseMax(-1.0).cwiseMin(1.0);
      const bool can_act = state_.bodies[i].active && !is_fallen(state_.bodies[i], cfg_.physics);
      forces[i] = can_act ? Vec2(to_world(i, a) * cfg_.physics.max_force) : Vec2::Zero();
    }
    const auto rep = physics_step(state_, forces, cfg_.physics, walls(), external_);
    touched_ = touched_ || rep.touched_ball[1];
    StepResult r;
    r.outcome = judge();
    r.done = r.outcome.terminal();
    done_ = r.done;
    outcome_ = r.outcome;
    for (int i = 0; i < 2; ++i) {
      r.observations[i] = observe(i);
      r.exploration_reward[i] = exploration_reward(i, clipped_actions[i]);
    }
    return r;
  }

  RealVector observe(int agent) const;
  // Dense shaping reward of `agent` for the current (post-step) state.
  virtual double exploration_reward(int agent, const RealVector& action) const = 0;
  virtual std::pair<double, double> competition_reward(const Outcome& outcome) const = 0;

  const WorldState& state() const { return state_; }
  void set_state(const WorldState& s) {
    state_ = s;
    done_ = false;
    outcome_ = Outcome{};
  }
  const Outcome& outcome() const { return outcome_; }
  bool done() const { return done_; }

  // Perturbation forces applied on every subsequent step until changed.
  void set_external_forces(const std::array<Vec2, 2>& f) { external_ = f; }

  // Frame transform: agent 0 sees the world, agent 1 sees it rotated by pi.
  static Vec2 to_frame(int agent, const Vec2& v) { return agent == 0 ? v : Vec2(-v); }
  static Vec2 to_world(int agent, const Vec2& v) { return to_frame(agent, v); }

 protected:
  virtual Walls walls() const { return {}; }
  virtual Outcome judge() = 0;
  virtual std::pair<double, double> context(int agent) const = 0;
  virtual void append_extras(int, RealVector&) const {}

  bool upright(int agent) const { return !is_fallen(state_.bodies[agent], cfg_.physics); }
  double alive_term(int agent) const { return upright(agent) ? cfg_.alive_bonus : -cfg_.alive_bonus; }
  double control_term(const RealVector& a) const { return -cfg_.control_cost * a.squaredNorm(); }
  // velocity toward the agent's goal (+x in its frame)
  double forward_velocity(int agent) const { return to_frame(agent, state_.bodies[agent].vel).x(); }

  GameKind kind_;
  GameConfig cfg_;
  WorldState state_;
  bool done_ = false;
  bool touched_ = false;
  Outcome outcome_;
  std::array<Vec2, 2> external_{Vec2::Zero(), Vec2::Zero()};
};

inline RealVector MarkovGame::observe(int agent) const {
  require(agent == 0 || agent == 1, "agent index must be 0 or 1");
  const Body& me = state_.bodies[agent];
  const Body& op = state_.bodies[1 - agent];
  RealVector o(obs_dim());
  const Vec2 p = to_frame(agent, me.pos), v = to_frame(agent, me.vel);
  o(0) = p.x(); o(1) = p.y();
  o(2) = v.x(); o(3) = v.y();
  o(4) = me.upright;
  if (op.active) {
    const Vec2 dp = to_frame(agent, op.pos - me.pos), dv = to_frame(agent, op.vel - me.vel);
    o(5) = dp.x(); o(6) = dp.y();
    o(7) = dv.x(); o(8) = dv.y();
    o(9) = op.upright;
  } else {
    o.segment(5, 5).setZero();
  }
  const auto [a, b] = context(agent);
  o(10) = a;
  o(11) = op.active ? b : 0.0;
  o(12) = static_cast<double>(state_.time_remaining()) / static_cast<double>(state_.horizon);
  append_extras(agent, o);
  return o;
}

}  // namespace selfplay
