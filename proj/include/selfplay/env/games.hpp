#pragma once

#include <cmath>
#include <memory>

#include "selfplay/env/game.hpp"
#include "selfplay/env/rewards.hpp"

namespace selfplay {

namespace detail {
inline Vec2 jitter(Rng& rng, const Vec2& nominal, double half_width) {
  return {uniform_in(rng, nominal.x() - half_width, nominal.x() + half_width),
          uniform_in(rng, nominal.y() - half_width, nominal.y() + half_width)};
}
}  // namespace detail

class CorridorGame : public MarkovGame {
 public:
  using MarkovGame::MarkovGame;

  WorldState randomize_reset(Rng& rng, double kappa) const override {
    WorldState s;
    s.horizon = cfg_.horizon;
    s.goal_x = cfg_.goal_distance;
    const double j = kappa * cfg_.position_jitter;
    for (int i = 0; i < 2; ++i) {
      Body& b = s.bodies[i];
      b.radius = cfg_.physics.body_radius;
      b.mass = cfg_.physics.body_mass;
      b.pos = detail::jitter(rng, to_world(i, Vec2(-cfg_.start_offset, 0.0)), j);
    }
    return s;
  }

  std::pair<double, double> competition_reward(const Outcome& o) const override {
    return selfplay::competition_reward(kind_, o);
  }

 protected:
  Walls walls() const override {
    const double x = cfg_.goal_distance + 1.0;
    return {-x, x, -cfg_.corridor_half_width, cfg_.corridor_half_width};
  }

  // Remaining distance to the goal line, in the agent's own frame.
  double goal_gap(int agent) const { return cfg_.goal_distance - to_frame(agent, state_.bodies[agent].pos).x(); }
  bool reached(int agent) const { return goal_gap(agent) <= 0.0; }

  double runner_reward(int agent, const RealVector& a) const {
    return forward_velocity(agent) + control_term(a) + alive_term(agent) - std::abs(goal_gap(agent));
  }
};

class RunToGoal final : public CorridorGame {
 public:
  explicit RunToGoal(GameConfig cfg) : CorridorGame(GameKind::RunToGoal, std::move(cfg)) {}

  double exploration_reward(int agent, const RealVector& a) const override { return runner_reward(agent, a); }

 protected:
  Outcome judge() override {
    const bool r0 = reached(0), r1 = reached(1);
    if (r0 && r1) return Outcome::draw();
    if (r0) return Outcome::win(0);
    if (r1) return Outcome::win(1);
    if (state_.step >= state_.horizon) return Outcome::draw();
    return {};
  }
  std::pair<double, double> context(int agent) const override { return {goal_gap(agent), goal_gap(1 - agent)}; }
};

// Agent 0 runs toward +x; agent 1 blocks.
class YouShallNotPass final : public CorridorGame {
 public:
  explicit YouShallNotPass(GameConfig cfg) : CorridorGame(GameKind::YouShallNotPass, std::move(cfg)) {}

  std::array<std::string, 2> role_names() const override { return {"runner", "blocker"}; }

  double exploration_reward(int agent, const RealVector& a) const override {
    if (agent == 0) return runner_reward(0, a);
    return control_term(a) + alive_term(1) + std::abs(state_.bodies[0].pos.x() - cfg_.goal_distance);
  }

 protected:
  Outcome judge() override {
    if (reached(0)) return Outcome::win(0);
    if (state_.step >= state_.horizon) {
      auto o = Outcome::win(1);
      o.winner_standing = upright(1);
      return o;
    }
    return {};
  }
  // Both entries measure world-x offsets to the runner's goal line.
  std::pair<double, double> context(int agent) const override {
    const double g = cfg_.goal_distance;
    return {g - state_.bodies[agent].pos.x(), g - state_.bodies[1 - agent].pos.x()};
  }
};

class Sumo final : public MarkovGame {
 public:
  explicit Sumo(GameConfig cfg) : MarkovGame(GameKind::Sumo, std::move(cfg)) {}

  WorldState randomize_reset(Rng& rng, double kappa) const override {
    WorldState s;
    s.horizon = cfg_.horizon;
    const double j = kappa * cfg_.position_jitter;
    for (int i = 0; i < 2; ++i) {
      Body& b = s.bodies[i];
      b.radius = cfg_.physics.body_radius;
      b.mass = cfg_.physics.body_mass;
      b.pos = detail::jitter(rng, to_world(i, Vec2(-cfg_.sumo_start_offset, 0.0)), j);
    }
    const double ja = kappa * cfg_.arena_jitter;
    s.arena_radius = uniform_in(rng, cfg_.arena_radius - ja, cfg_.arena_radius + ja);
    if (solo_) s.bodies[1].active = false;
    return s;
  }

  double exploration_reward(int agent, const RealVector& a) const override {
    return control_term(a) + alive_term(agent) - state_.bodies[agent].pos.norm();
  }

  std::pair<double, double> competition_reward(const Outcome& o) const override {
    return selfplay::competition_reward(kind_, o);
  }

  // Single-agent mode: body 1 is removed from the arena.
  void set_solo(bool solo) { solo_ = solo; }

  bool out_of_ring(int agent) const { return state_.bodies[agent].pos.norm() > state_.arena_radius; }

 protected:
  Outcome judge() override {
    std::array<bool, 2> lost{false, false};
    for (int i = 0; i < 2; ++i)
      lost[i] = state_.bodies[i].active && (out_of_ring(i) || !upright(i));
    if (lost[0] && lost[1]) return Outcome::draw();
    if (lost[0]) return Outcome::win(1);
    if (lost[1]) return Outcome::win(0);
    if (state_.step >= state_.horizon) return Outcome::draw();
    return {};
  }
  std::pair<double, double> context(int agent) const override {
    return {state_.arena_radius - state_.bodies[agent].pos.norm(),
            state_.arena_radius - state_.bodies[1 - agent].pos.norm()};
  }

 private:
  bool solo_ = false;
};

// Agent 0 kicks toward the goal line at +goal_x; agent 1 defends.
class KickAndDefend final : public MarkovGame {
 public:
  explicit KickAndDefend(GameConfig cfg) : MarkovGame(GameKind::KickAndDefend, std::move(cfg)) {}

  std::size_t obs_dim() const override { return kBaseObsDim + kBallObsDim; }
  std::array<std::string, 2> role_names() const override { return {"kicker", "defender"}; }

  WorldState randomize_reset(Rng& rng, double kappa) const override {
    WorldState s;
    s.horizon = cfg_.horizon;
    s.goal_x = cfg_.goal_x;
    const double j = kappa * cfg_.position_jitter;
    const double g = cfg_.goal_x;
    s.bodies[0].pos = detail::jitter(rng, Vec2(g - cfg_.kicker_offset, 0.0), j);
    s.bodies[1].pos = detail::jitter(rng, Vec2(g - cfg_.defender_offset, 0.0), j);
    for (auto& b : s.bodies) {
      b.radius = cfg_.physics.body_radius;
      b.mass = cfg_.physics.body_mass;
    }
    Ball ball;
    ball.radius = cfg_.physics.ball_radius;
    ball.mass = cfg_.physics.ball_mass;
    ball.pos = detail::jitter(rng, Vec2(g - cfg_.ball_offset, 0.0), kappa * cfg_.ball_jitter);
    s.ball = ball;
    return s;
  }

  double exploration_reward(int agent, const RealVector& a) const override {
    const Ball& ball = *state_.ball;
    const double ball_to_goal = std::abs(ball.pos.x() - cfg_.goal_x);
    if (agent == 0)
      return forward_velocity(0) + control_term(a) + alive_term(0) - (state_.bodies[0].pos - ball.pos).norm() -
             ball_to_goal;
    const double alive = in_keeper_area() ? alive_term(1) : -cfg_.alive_bonus;
    return control_term(a) + alive + ball_to_goal;
  }

  std::pair<double, double> competition_reward(const Outcome& o) const override {
    return selfplay::competition_reward(kind_, o);
  }

  bool in_keeper_area() const { return state_.bodies[1].pos.x() >= cfg_.goal_x - cfg_.keeper_depth; }

 protected:
  Walls walls() const override {
    return {cfg_.goal_x - cfg_.field_length, cfg_.goal_x + 1.5, -cfg_.field_half_width, cfg_.field_half_width};
  }

  Outcome judge() override {
    if (!in_keeper_area()) {
      auto o = Outcome::win(0);
      o.defender_area_violation = true;
      return o;
    }
    const Ball& ball = *state_.ball;
    const bool crossed = ball.pos.x() >= cfg_.goal_x;
    if (crossed && std::abs(ball.pos.y()) < cfg_.goal_half_width) return Outcome::win(0);
    if (crossed || state_.step >= state_.horizon) {
      auto o = Outcome::win(1);
      o.defender_touched_ball = touched_;
      o.defender_standing_at_end = upright(1);
      return o;
    }
    return {};
  }

  std::pair<double, double> context(int agent) const override {
    return {cfg_.goal_x - state_.bodies[agent].pos.x(), cfg_.goal_x - state_.bodies[1 - agent].pos.x()};
  }

  void append_extras(int agent, RealVector& o) const override {
    const Ball& ball = *state_.ball;
    const Vec2 me = state_.bodies[agent].pos;
    const Vec2 rel = to_frame(agent, ball.pos - me);
    const Vec2 vel = to_frame(agent, ball.vel);
    const Vec2 left = to_frame(agent, ball.pos - Vec2(cfg_.goal_x, cfg_.goal_half_width));
    const Vec2 right = to_frame(agent, ball.pos - Vec2(cfg_.goal_x, -cfg_.goal_half_width));
    const std::size_t k = kBaseObsDim;
    o(k + 0) = rel.x(); o(k + 1) = rel.y();
    o(k + 2) = vel.x(); o(k + 3) = vel.y();
    o(k + 4) = std::abs(ball.pos.x() - cfg_.goal_x);
    o(k + 5) = left.x(); o(k + 6) = left.y();
    o(k + 7) = right.x(); o(k + 8) = right.y();
  }
};

inline std::unique_ptr<MarkovGame> make_game(GameKind kind, const GameConfig& cfg) {
  switch (kind) {
    case GameKind::RunToGoal: return std::make_unique<RunToGoal>(cfg);
    case GameKind::YouShallNotPass: return std::make_unique<YouShallNotPass>(cfg);
    case GameKind::Sumo: return std::make_unique<Sumo>(cfg);
    case GameKind::KickAndDefend: return std::make_unique<KickAndDefend>(cfg);
  }
  throw ContractViolation("unknown game kind");
}

inline std::unique_ptr<MarkovGame> make_game(std::string_view name, const GameConfig& cfg) {
  return make_game(game_kind_from_name(name), cfg);
}

}  // namespace selfplay
