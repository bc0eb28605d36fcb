#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "selfplay/env/games.hpp"

using namespace selfplay;

namespace {

WorldState two_bodies(Vec2 p0, Vec2 v0, Vec2 p1, Vec2 v1) {
  WorldState s;
  s.bodies[0].pos = p0;
  s.bodies[0].vel = v0;
  s.bodies[1].pos = p1;
  s.bodies[1].vel = v1;
  return s;
}

RealVector act(double x, double y) {
  RealVector a(2);
  a << x, y;
  return a;
}

Vec2 momentum(const WorldState& s) {
  Vec2 m = Vec2::Zero();
  for (const auto& b : s.bodies) m += b.mass * b.vel;
  if (s.ball) m += s.ball->mass * s.ball->vel;
  return m;
}

double kinetic(const WorldState& s) {
  double e = 0.0;
  for (const auto& b : s.bodies) e += 0.5 * b.mass * b.vel.squaredNorm();
  if (s.ball) e += 0.5 * s.ball->mass * s.ball->vel.squaredNorm();
  return e;
}

}  // namespace

TEST(Physics, StaticsOnlyRecoverUpright) {
  PhysicsConfig cfg;
  auto s = two_bodies({-2, 0}, {0, 0}, {2, 1}, {0, 0});
  s.bodies[0].upright = 0.7;
  auto before = s;
  physics_step(s, {Vec2::Zero(), Vec2::Zero()}, cfg);
  EXPECT_EQ(s.bodies[0].pos, before.bodies[0].pos);
  EXPECT_EQ(s.bodies[1].pos, before.bodies[1].pos);
  EXPECT_EQ(s.bodies[0].vel, Vec2::Zero());
  EXPECT_NEAR(s.bodies[0].upright, 0.7 + cfg.upright_recovery, 1e-15);
  EXPECT_EQ(s.bodies[1].upright, 1.0);
}

TEST(Physics, HeadOnCollisionIsSymmetric) {
  PhysicsConfig cfg;
  cfg.drag = 0.0;
  auto s = two_bodies({-0.45, 0}, {2, 0}, {0.45, 0}, {-2, 0});
  const Vec2 p0 = momentum(s);
  auto rep = physics_step(s, {Vec2::Zero(), Vec2::Zero()}, cfg);
  EXPECT_GT(rep.body_impulse[0], 0.0);
  EXPECT_NEAR(s.bodies[0].vel.x(), -s.bodies[1].vel.x(), 1e-12);
  EXPECT_LT(s.bodies[0].vel.x(), 0.0);
  EXPECT_NEAR(s.bodies[0].upright, s.bodies[1].upright, 1e-12);
  EXPECT_LT((momentum(s) - p0).norm(), 1e-9);
}

TEST(Physics, EulerRecurrenceWithoutDrag) {
  PhysicsConfig cfg;
  cfg.drag = 0.0;
  WorldState s;
  s.bodies[1].active = false;
  const Vec2 f(1.5, -0.5);
  double x = 0, y = 0, vx = 0, vy = 0;
  for (int k = 0; k < 40; ++k) {
    physics_step(s, {f, Vec2::Zero()}, cfg);
    vx += f.x() / 1.0 * cfg.dt;
    vy += f.y() / 1.0 * cfg.dt;
    x += vx * cfg.dt;
    y += vy * cfg.dt;
  }
  EXPECT_NEAR(s.bodies[0].pos.x(), x, 1e-12);
  EXPECT_NEAR(s.bodies[0].pos.y(), y, 1e-12);
}

TEST(Physics, CollisionsConserveMomentumAndDoNotAddEnergy) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  PhysicsConfig cfg;
  cfg.drag = 0.0;
  cfg.ball_drag = 0.0;
  cfg.dt = 1e-9;  // isolate the impulse exchange from integration
  int collisions = 0;
  for (int k = 0; k < 2000; ++k) {
    auto s = two_bodies({0, 0}, {3 * u(rng), 3 * u(rng)}, {0.9 * u(rng), 0.9 * u(rng)}, {3 * u(rng), 3 * u(rng)});
    s.bodies[1].mass = 1.0 + u(rng) * 0.5;
    if (k % 2) {
      Ball b;
      b.pos = Vec2(0.5 * u(rng), 0.5 * u(rng));
      b.vel = Vec2(u(rng), u(rng));
      s.ball = b;
    }
    const Vec2 p0 = momentum(s);
    const double e0 = kinetic(s);
    auto rep = physics_step(s, {Vec2::Zero(), Vec2::Zero()}, cfg);
    collisions += rep.contacts;
    EXPECT_LT((momentum(s) - p0).norm(), 1e-9);
    EXPECT_LE(kinetic(s), e0 + 1e-9);
  }
  EXPECT_GT(collisions, 500);
}

TEST(Physics, StruckBodyTakesTheDamage) {
  PhysicsConfig cfg;
  auto s = two_bodies({-0.45, 0}, {3, 0}, {0.45, 0}, {0, 0});
  physics_step(s, {Vec2::Zero(), Vec2::Zero()}, cfg);
  EXPECT_EQ(s.bodies[0].upright, 1.0);
  EXPECT_LT(s.bodies[1].upright, 1.0);
}

TEST(Physics, BracingAgainstWindPreventsUprightLoss) {
  PhysicsConfig cfg;
  WorldState a, b;
  a.bodies[1].active = b.bodies[1].active = false;
  const Vec2 wind(2.0, 0.0);
  physics_step(a, {Vec2::Zero(), Vec2::Zero()}, cfg, {}, {wind, Vec2::Zero()});
  physics_step(b, {Vec2(-3.0, 0.0), Vec2::Zero()}, cfg, {}, {wind, Vec2::Zero()});
  EXPECT_LT(a.bodies[0].upright, 1.0);
  EXPECT_EQ(b.bodies[0].upright, 1.0);
}

TEST(ExplorationReward, SumoCenterUpright) {
  Sumo g(GameConfig{});
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.bodies[0].pos = Vec2::Zero();
  g.set_state(s);
  EXPECT_EQ(g.exploration_reward(0, act(0, 0)), 5.0);
}

TEST(ExplorationReward, RunToGoalTenUnitsAway) {
  GameConfig cfg;
  cfg.goal_distance = 5.0;
  RunToGoal g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.bodies[0].pos = Vec2(-5.0, 0.0);
  s.bodies[0].vel = Vec2::Zero();
  g.set_state(s);
  EXPECT_EQ(g.exploration_reward(0, act(0, 0)), -5.0);
  // agent 1's goal is at -5 in world coordinates
  s.bodies[1].pos = Vec2(5.0, 0.0);
  g.set_state(s);
  EXPECT_EQ(g.exploration_reward(1, act(0, 0)), -5.0);
}

TEST(ExplorationReward, KickerArithmetic) {
  GameConfig cfg;
  KickAndDefend g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.ball->pos = Vec2(cfg.goal_x - 4.0, 0.0);
  s.bodies[0].pos = s.ball->pos + Vec2(0.0, 1.0);
  s.bodies[0].vel = Vec2(0.5, 0.0);
  g.set_state(s);
  EXPECT_NEAR(g.exploration_reward(0, act(1, 0)), 0.4, 1e-12);
}

TEST(ExplorationReward, FallenBodyPaysAlivePenalty) {
  Sumo g(GameConfig{});
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.bodies[0].pos = Vec2::Zero();
  s.bodies[0].upright = 0.3;
  g.set_state(s);
  EXPECT_EQ(g.exploration_reward(0, act(0, 0)), -5.0);
}

TEST(ExplorationReward, DefenderAliveOnlyInsideKeeperArea) {
  GameConfig cfg;
  KickAndDefend g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.ball->pos = Vec2(cfg.goal_x - 4.0, 0.0);
  s.bodies[1].pos = Vec2(cfg.goal_x - 1.0, 0.0);
  g.set_state(s);
  EXPECT_NEAR(g.exploration_reward(1, act(0, 0)), 5.0 + 4.0, 1e-12);
  s.bodies[1].pos = Vec2(cfg.goal_x - 3.5, 0.0);
  g.set_state(s);
  EXPECT_NEAR(g.exploration_reward(1, act(0, 0)), -5.0 + 4.0, 1e-12);
}

TEST(CompetitionReward, Table) {
  EXPECT_EQ(competition_reward(GameKind::RunToGoal, Outcome::win(0)), (std::pair{1000.0, -1000.0}));
  EXPECT_EQ(competition_reward(GameKind::RunToGoal, Outcome::draw()), (std::pair{-1000.0, -1000.0}));
  EXPECT_EQ(competition_reward(GameKind::Sumo, Outcome::draw()), (std::pair{-1000.0, -1000.0}));
  EXPECT_EQ(competition_reward(GameKind::Sumo, Outcome::win(1)), (std::pair{-1000.0, 1000.0}));
  auto blocked = Outcome::win(1);
  EXPECT_EQ(competition_reward(GameKind::YouShallNotPass, blocked), (std::pair{-1000.0, 1000.0}));
  blocked.winner_standing = false;
  EXPECT_EQ(competition_reward(GameKind::YouShallNotPass, blocked), (std::pair{-1000.0, 0.0}));
  EXPECT_EQ(competition_reward(GameKind::YouShallNotPass, Outcome::win(0)), (std::pair{1000.0, -1000.0}));
  auto saved = Outcome::win(1);
  saved.defender_touched_ball = true;
  saved.defender_standing_at_end = true;
  EXPECT_EQ(competition_reward(GameKind::KickAndDefend, saved), (std::pair{-1000.0, 2000.0}));
  saved.defender_standing_at_end = false;
  EXPECT_EQ(competition_reward(GameKind::KickAndDefend, saved).second, 1500.0);
  auto violation = Outcome::win(0);
  violation.defender_area_violation = true;
  EXPECT_EQ(competition_reward(GameKind::KickAndDefend, violation).second, -1000.0);
  EXPECT_THROW(competition_reward(GameKind::Sumo, Outcome{}), ContractViolation);
}

TEST(CompetitionReward, ZeroSumWinsAndCostlyDraws) {
  for (auto k : {GameKind::RunToGoal, GameKind::Sumo}) {
    for (int w : {0, 1}) {
      auto [a, b] = competition_reward(k, Outcome::win(w));
      EXPECT_EQ(a + b, 0.0);
      EXPECT_EQ(w == 0 ? a : b, 1000.0);
    }
    auto [a, b] = competition_reward(k, Outcome::draw());
    EXPECT_EQ(a, -1000.0);
    EXPECT_EQ(b, -1000.0);
  }
}

TEST(BlendReward, Phases) {
  EXPECT_EQ(blend_reward(1.0, 3.5, 1000, 2, 9), 3.5);
  EXPECT_EQ(blend_reward(1.0, 3.5, 1000, 9, 9), 3.5);
  EXPECT_EQ(blend_reward(0.0, 3.5, 1000, 2, 9), 0.0);
  EXPECT_EQ(blend_reward(0.0, 3.5, 1000, 9, 9), 1000.0);
  EXPECT_EQ(blend_reward(0.25, 2.0, 1000.0, 9, 9), 750.5);
}

TEST(BlendReward, EpisodeTotalUnderZeroAlphaIsCompetitionReward) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 10);
  const long T = 37;
  double total = 0.0;
  for (long t = 0; t <= T; ++t) total += blend_reward(0.0, n(rng), -1000.0, t, T);
  EXPECT_EQ(total, -1000.0);
}

TEST(Anneal, Schedule) {
  EXPECT_EQ(anneal_alpha(0, 500), 1.0);
  EXPECT_EQ(anneal_alpha(250, 500), 0.5);
  EXPECT_EQ(anneal_alpha(500, 500), 0.0);
  EXPECT_EQ(anneal_alpha(900, 500), 0.0);
  EXPECT_THROW(anneal_alpha(1, 0), ContractViolation);
  double prev = 0.0;
  for (long i = 0; i < 1000; i += 7) {
    const double k = randomization_level(i, 0.1, 500);
    EXPECT_GE(k, prev);
    prev = k;
  }
  EXPECT_EQ(randomization_level(0, 0.1, 500), 0.1);
  EXPECT_EQ(randomization_level(500, 0.1, 500), 1.0);
}

TEST(Reset, ZeroKappaIsNominal) {
  GameConfig cfg;
  for (auto k : {GameKind::RunToGoal, GameKind::YouShallNotPass, GameKind::Sumo, GameKind::KickAndDefend}) {
    auto g = make_game(k, cfg);
    Rng r1(1), r2(99);
    auto a = g->randomize_reset(r1, 0.0);
    auto b = g->randomize_reset(r2, 0.0);
    for (int i = 0; i < 2; ++i) EXPECT_EQ(a.bodies[i].pos, b.bodies[i].pos);
    EXPECT_EQ(a.arena_radius, b.arena_radius);
    if (a.ball) {
      EXPECT_EQ(a.ball->pos, b.ball->pos);
    }
  }
}

TEST(Reset, SameSeedSameLayout) {
  auto g = make_game(GameKind::KickAndDefend, GameConfig{});
  Rng r1(7), r2(7);
  auto a = g->randomize_reset(r1, 0.6);
  auto b = g->randomize_reset(r2, 0.6);
  EXPECT_EQ(a.ball->pos, b.ball->pos);
  EXPECT_EQ(a.bodies[0].pos, b.bodies[0].pos);
}

TEST(Reset, FullKappaCoversBallJitterInterval) {
  GameConfig cfg;
  auto g = make_game(GameKind::KickAndDefend, cfg);
  Rng rng(3);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const double x = g->randomize_reset(rng, 1.0).ball->pos.x();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double nominal = cfg.goal_x - cfg.ball_offset;
  EXPECT_GE(lo, nominal - cfg.ball_jitter);
  EXPECT_LE(hi, nominal + cfg.ball_jitter);
  EXPECT_GE(hi - lo, 0.95 * 2 * cfg.ball_jitter);
}

TEST(Reset, KappaSupportsAreNested) {
  GameConfig cfg;
  auto sumo = make_game(GameKind::Sumo, cfg);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    double k1 = u(rng), k2 = u(rng);
    if (k1 > k2) std::swap(k1, k2);
    for (int i = 0; i < 50; ++i) {
      auto s = sumo->randomize_reset(rng, k1);
      // every draw at k1 lies inside the k2 support
      EXPECT_LE(std::abs(s.arena_radius - cfg.arena_radius), k2 * cfg.arena_jitter + 1e-12);
      EXPECT_LE(std::abs(s.bodies[0].pos.x() + cfg.sumo_start_offset), k2 * cfg.position_jitter + 1e-12);
    }
  }
}

TEST(Observe, SumoMirrorSymmetry) {
  Sumo g(GameConfig{});
  Rng rng(1);
  auto obs = g.reset(rng, 0.0);
  EXPECT_EQ(obs[0], obs[1]);
  auto r = g.step({act(0.3, -0.2), act(0.3, -0.2)});
  EXPECT_LT((r.observations[0] - r.observations[1]).norm(), 1e-12);
}

TEST(Observe, TimeRemainingDecreases) {
  GameConfig cfg;
  cfg.horizon = 40;
  Sumo g(cfg);
  Rng rng(1);
  auto obs = g.reset(rng, 0.0);
  double prev = obs[0](12);
  EXPECT_EQ(prev, 1.0);
  for (int t = 0; t < 40; ++t) {
    auto r = g.step({act(0, 0), act(0, 0)});
    EXPECT_NEAR(prev - r.observations[0](12), 1.0 / 40, 1e-12);
    prev = r.observations[0](12);
    if (r.done) {
      EXPECT_EQ(t, 39);
      EXPECT_EQ(r.outcome.kind, OutcomeKind::Draw);
    }
  }
}

TEST(Observe, KickLayoutAddsBallBlock) {
  GameConfig cfg;
  auto sumo = make_game(GameKind::Sumo, cfg);
  auto kick = make_game(GameKind::KickAndDefend, cfg);
  EXPECT_EQ(kick->obs_dim() - sumo->obs_dim(), kBallObsDim);
  Rng rng(2);
  auto obs = kick->reset(rng, 0.0);
  EXPECT_EQ(static_cast<std::size_t>(obs[0].size()), kick->obs_dim());
  EXPECT_NEAR(obs[0](13), cfg.kicker_offset - cfg.ball_offset, 1e-12);
}

TEST(Game, StepAfterTerminalThrows) {
  GameConfig cfg;
  cfg.horizon = 2;
  RunToGoal g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  g.step({act(0, 0), act(0, 0)});
  auto r = g.step({act(0, 0), act(0, 0)});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.outcome.kind, OutcomeKind::Draw);
  EXPECT_THROW(g.step({act(0, 0), act(0, 0)}), ContractViolation);
}

TEST(Game, RunningToGoalWins) {
  RunToGoal g(GameConfig{});
  Rng rng(1);
  g.reset(rng, 0.0);
  StepResult r;
  int steps = 0;
  // agent 0 runs along y = 1 to pass the idle opponent
  while (!g.done()) {
    r = g.step({act(1, g.state().bodies[0].pos.y() < 1.0 ? 1 : 0), act(0, 0)});
    ++steps;
  }
  EXPECT_EQ(r.outcome.kind, OutcomeKind::Win);
  EXPECT_EQ(r.outcome.winner, 0);
  EXPECT_LT(steps, 200);
}

TEST(Game, SumoPushOutWins) {
  Sumo g(GameConfig{});
  Rng rng(1);
  g.reset(rng, 0.0);
  StepResult r;
  while (!g.done()) r = g.step({act(1, 0), act(0, 0)});
  EXPECT_EQ(r.outcome.kind, OutcomeKind::Win);
  EXPECT_EQ(r.outcome.winner, 0);
}

TEST(Game, DefenderLeavingAreaLoses) {
  GameConfig cfg;
  KickAndDefend g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  StepResult r;
  while (!g.done()) r = g.step({act(0, 0), act(1, 0)});  // defender frame: +x points away from goal
  EXPECT_TRUE(r.outcome.defender_area_violation);
  EXPECT_EQ(g.competition_reward(r.outcome).second, -1000.0);
}

TEST(Game, UntouchedShotWinsForKicker) {
  GameConfig cfg;
  KickAndDefend g(cfg);
  Rng rng(1);
  g.reset(rng, 0.0);
  auto s = g.state();
  s.bodies[1].pos = Vec2(cfg.goal_x - 1.0, 2.5);
  s.ball->vel = Vec2(6.0, -0.6);
  g.set_state(s);
  StepResult r;
  while (!g.done()) r = g.step({act(0, 0), act(0, 0)});
  EXPECT_EQ(r.outcome.winner, 0);
  EXPECT_FALSE(r.outcome.defender_area_violation);
}
