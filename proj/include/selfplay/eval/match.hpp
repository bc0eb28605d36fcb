#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "selfplay/env/games.hpp"
#include "selfplay/nn/policy.hpp"
#include "selfplay/rollout/seed.hpp"

namespace selfplay {

// Maps an observation to a clipped action in [-1, 1]^2.
using Actor = std::function<RealVector(const RealVector& obs, Rng& rng)>;

inline Actor gaussian_actor(std::shared_ptr<const GaussianPolicy> p, bool deterministic = true) {
  return [p = std::move(p), deterministic](const RealVector& obs, Rng& rng) -> RealVector {
    const auto out = policy_forward(*p, obs);
    if (deterministic) return clip_action(out.mean, p->action_low, p->action_high);
    return sample_action(out.mean, out.log_std, p->action_low, p->action_high, rng).clipped;
  };
}

inline Actor uniform_random_actor() {
  return [](const RealVector&, Rng& rng) -> RealVector {
    RealVector a(2);
    a(0) = uniform_in(rng, -1.0, 1.0);
    a(1) = uniform_in(rng, -1.0, 1.0);
    return a;
  };
}

inline Actor zero_actor() {
  return [](const RealVector&, Rng&) -> RealVector { return RealVector::Zero(2); };
}

// A competitor: the actor it uses on each side, plus the observation size it expects
// there (0 = any). Symmetric-game contestants use the same actor on both sides.
struct Contestant {
  std::array<Actor, 2> by_slot;
  std::array<std::size_t, 2> obs_dim{0, 0};
};

inline Contestant policy_contestant(std::shared_ptr<const GaussianPolicy> side0,
                                    std::shared_ptr<const GaussianPolicy> side1, bool deterministic = true) {
  Contestant c;
  c.obs_dim = {side0->obs_dim(), side1->obs_dim()};
  c.by_slot = {gaussian_actor(std::move(side0), deterministic), gaussian_actor(std::move(side1), deterministic)};
  return c;
}

inline Contestant actor_contestant(Actor a) { return Contestant{{a, a}, {0, 0}}; }

struct MatchResult {
  long wins_a = 0;
  long wins_b = 0;
  long draws = 0;
  long episodes = 0;
  double mean_length = 0.0;

  double win_rate_a() const { return episodes ? static_cast<double>(wins_a) / static_cast<double>(episodes) : 0.0; }
  double win_rate_b() const { return episodes ? static_cast<double>(wins_b) / static_cast<double>(episodes) : 0.0; }
  double draw_rate() const { return episodes ? static_cast<double>(draws) / static_cast<double>(episodes) : 0.0; }
};

struct MatchOptions {
  std::uint64_t seed = 0;
  double kappa = 1.0;
  std::optional<std::string> trace_csv;  // per-step positions, for inspection
};

// Episodes come in pairs that share a reset: in episode 2k contestant A plays side 0,
// in episode 2k+1 side 1. Random streams are keyed by side, so swapping A and B
// transposes the result exactly.
inline MatchResult play_episodes(const Contestant& a, const Contestant& b, MarkovGame& game, long n,
                                 const MatchOptions& opt = {}) {
  for (int s = 0; s < 2; ++s) {
    for (const Contestant* c : {&a, &b})
      if (c->obs_dim[static_cast<std::size_t>(s)] != 0 && c->obs_dim[static_cast<std::size_t>(s)] != game.obs_dim())
        throw ContractViolation("contestant observation size does not match " + std::string(game.name()));
  }
  std::unique_ptr<std::ofstream> trace;
  if (opt.trace_csv) {
    trace = std::make_unique<std::ofstream>(*opt.trace_csv);
    *trace << "episode,step,a_side,x0,y0,u0,x1,y1,u1\n";
  }
  MatchResult r;
  double total_length = 0.0;
  for (long e = 0; e < n; ++e) {
    const long pair = e / 2;
    const int a_side = static_cast<int>(e % 2);
    Rng reset_rng = seed_stream(opt.seed, static_cast<std::uint64_t>(pair), kEvalStream, 0);
    std::array<Rng, 2> act_rng{seed_stream(opt.seed, static_cast<std::uint64_t>(pair), kEvalStream, 1),
                               seed_stream(opt.seed, static_cast<std::uint64_t>(pair), kEvalStream, 2)};
    std::array<const Actor*, 2> actors;
    actors[static_cast<std::size_t>(a_side)] = &a.by_slot[static_cast<std::size_t>(a_side)];
    actors[static_cast<std::size_t>(1 - a_side)] = &b.by_slot[static_cast<std::size_t>(1 - a_side)];
    auto obs = game.reset(reset_rng, opt.kappa);
    long len = 0;
    while (true) {
      std::array<RealVector, 2> acts{(*actors[0])(obs[0], act_rng[0]), (*actors[1])(obs[1], act_rng[1])};
      auto step = game.step(acts);
      ++len;
      if (trace) {
        const auto& s = game.state();
        *trace << e << ',' << len << ',' << a_side << ',' << s.bodies[0].pos.x() << ',' << s.bodies[0].pos.y() << ','
               << s.bodies[0].upright << ',' << s.bodies[1].pos.x() << ',' << s.bodies[1].pos.y() << ','
               << s.bodies[1].upright << '\n';
      }
      obs = std::move(step.observations);
      if (!step.done) continue;
      if (step.outcome.kind == OutcomeKind::Draw) ++r.draws;
      else if (step.outcome.winner == a_side) ++r.wins_a;
      else ++r.wins_b;
      break;
    }
    total_length += static_cast<double>(len);
    ++r.episodes;
  }
  r.mean_length = n > 0 ? total_length / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace selfplay
