#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "selfplay/env/games.hpp"
#include "selfplay/env/rewards.hpp"
#include "selfplay/nn/policy.hpp"
#include "selfplay/ppo/trajectory.hpp"
#include "selfplay/rollout/seed.hpp"
#include "selfplay/store/snapshot_store.hpp"

namespace selfplay {

using GameFactory = std::function<std::unique_ptr<MarkovGame>()>;

// One trainable policy. In symmetric games every learner has role 0 and plays
// either side; in asymmetric games the role is the fixed side it plays.
struct LearnerSpec {
  int role = 0;
  std::size_t member = 0;
  const GaussianPolicy* policy = nullptr;
  const ValueFunction* value = nullptr;
};

struct IterationPlan {
  long iteration = 0;
  std::vector<LearnerSpec> learners;
  // Store agent names of the ensemble members of each role (one role when symmetric).
  std::vector<std::vector<std::string>> pools;
  long quota = 4096;  // learner-side steps per learner
  int workers = 1;
  std::uint64_t seed = 0;
  CurriculumState curriculum;
  double delta = 0.0;
  double value_scale = 1.0;

  void validate() const {
    require(quota > 0, "sample quota must be positive");
    require(workers >= 1, "worker count must be >= 1");
    require(!learners.empty(), "plan has no learners");
    for (const auto& l : learners) {
      require(l.policy && l.value, "learner parameters missing");
      require(l.role >= 0 && static_cast<std::size_t>(l.role) < pools.size(), "learner role out of range");
      require(l.member < pools[static_cast<std::size_t>(l.role)].size(), "learner member out of range");
    }
  }
};

struct EpisodeRecord {
  std::size_t learner = 0;
  int slot = 0;  // side the learner played
  std::string opponent_agent;
  long opponent_iteration = 0;
  Outcome outcome;
  long length = 0;
  double dense_return = 0.0;
  double competition_reward = 0.0;  // learner side
  double blended_return = 0.0;
  Trajectory trajectory;

  bool won() const { return outcome.kind == OutcomeKind::Win && outcome.winner == slot; }
  bool lost() const { return outcome.kind == OutcomeKind::Win && outcome.winner != slot; }
  bool drew() const { return outcome.kind == OutcomeKind::Draw; }
};

struct CollectedBatch {
  std::vector<std::vector<EpisodeRecord>> episodes;  // per learner, in episode order

  long steps(std::size_t learner) const {
    long n = 0;
    for (const auto& e : episodes[learner]) n += e.length;
    return n;
  }
  std::vector<Trajectory> trajectories(std::size_t learner) const {
    std::vector<Trajectory> out;
    for (const auto& e : episodes[learner]) out.push_back(e.trajectory);
    return out;
  }
};

struct CollectionSummary {
  long steps = 0;
  long episodes = 0;
  long wins = 0;
  long losses = 0;
  long draws = 0;
  double mean_length = 0.0;
  double mean_dense_return = 0.0;
  double mean_competition_reward = 0.0;
};

inline CollectionSummary summarize(const std::vector<EpisodeRecord>& eps) {
  CollectionSummary s;
  for (const auto& e : eps) {
    s.steps += e.length;
    ++s.episodes;
    s.wins += e.won();
    s.losses += e.lost();
    s.draws += e.drew();
    s.mean_dense_return += e.dense_return;
    s.mean_competition_reward += e.competition_reward;
  }
  if (s.episodes > 0) {
    const double n = static_cast<double>(s.episodes);
    s.mean_length = static_cast<double>(s.steps) / n;
    s.mean_dense_return /= n;
    s.mean_competition_reward /= n;
  }
  return s;
}

// Worker count: explicit value if positive, else SELFPLAY_WORKERS, else 1.
inline int resolve_worker_count(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("SELFPLAY_WORKERS")) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || w < 1 || w > 1024)
      throw ConfigError(std::string("SELFPLAY_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<int>(w);
  }
  return 1;
}

// Plays one complete episode for learner `li` whose per-learner episode index is n.
inline EpisodeRecord play_learner_episode(const IterationPlan& plan, std::size_t li, long n, MarkovGame& game,
                                          const SnapshotStore& store, Rng& rng) {
  const LearnerSpec& me = plan.learners[li];
  const bool sym = game.symmetric();
  EpisodeRecord rec;
  rec.learner = li;
  rec.slot = sym ? static_cast<int>(n % 2) : me.role;
  const int opp_slot = 1 - rec.slot;

  const std::size_t opp_role = sym ? 0 : static_cast<std::size_t>(1 - me.role);
  const auto& pool = plan.pools[opp_role];
  std::size_t opp_member = 0;
  if (sym) {
    opp_member = pick_ensemble_opponent(pool.size(), me.member, rng, true);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    opp_member = pick(rng);
  }
  rec.opponent_agent = pool[opp_member];
  const Snapshot opp = sample_opponent(store, rec.opponent_agent, plan.delta, rng);
  rec.opponent_iteration = opp.iteration;

  auto obs = game.reset(rng, plan.curriculum.kappa);
  std::vector<double> dense;
  Trajectory& tr = rec.trajectory;
  while (true) {
    const RealVector& o = obs[static_cast<std::size_t>(rec.slot)];
    const auto out = policy_forward(*me.policy, o);
    const auto a = sample_action(out.mean, out.log_std, me.policy->action_low, me.policy->action_high, rng);
    const auto oo = policy_forward(*opp.policy, obs[static_cast<std::size_t>(opp_slot)]);
    const auto b = sample_action(oo.mean, oo.log_std, opp.policy->action_low, opp.policy->action_high, rng);

    tr.observations.push_back(o);
    tr.raw_actions.push_back(a.raw);
    tr.old_log_probs.push_back(log_prob(out.mean, out.log_std, a.raw));
    tr.values.push_back(value_forward(*me.value, o) * plan.value_scale);

    std::array<RealVector, 2> actions;
    actions[static_cast<std::size_t>(rec.slot)] = a.clipped;
    actions[static_cast<std::size_t>(opp_slot)] = b.clipped;
    auto r = game.step(actions);
    dense.push_back(r.exploration_reward[static_cast<std::size_t>(rec.slot)]);
    obs = std::move(r.observations);
    if (r.done) {
      rec.outcome = r.outcome;
      break;
    }
  }
  const auto comp = game.competition_reward(rec.outcome);
  rec.competition_reward = rec.slot == 0 ? comp.first : comp.second;
  rec.length = static_cast<long>(dense.size());
  const long last = rec.length - 1;
  tr.rewards.resize(dense.size());
  for (long t = 0; t <= last; ++t) {
    const double d = dense[static_cast<std::size_t>(t)];
    tr.rewards[static_cast<std::size_t>(t)] = plan.curriculum.reward(d, rec.competition_reward, t, last);
    rec.dense_return += d;
    rec.blended_return += tr.rewards[static_cast<std::size_t>(t)];
  }
  tr.terminal = true;
  return rec;
}

// Round-based collection: in round k, worker w plays per-learner episode k*W + w
// for every learner still below its quota, then all workers meet at a barrier.
// Episodes in flight always finish, so the quota can be overshot by up to W*T_max.
inline CollectedBatch collect_iteration(const IterationPlan& plan, const GameFactory& factory,
                                        const SnapshotStore& store) {
  plan.validate();
  const std::size_t L = plan.learners.size();
  const int W = plan.workers;
  std::vector<std::unique_ptr<MarkovGame>> games;
  for (int w = 0; w < W; ++w) games.push_back(factory());

  CollectedBatch batch;
  batch.episodes.resize(L);
  std::vector<long> steps(L, 0);
  for (long round = 0;; ++round) {
    std::vector<std::size_t> pending;
    for (std::size_t l = 0; l < L; ++l)
      if (steps[l] < plan.quota) pending.push_back(l);
    if (pending.empty()) break;

    std::vector<std::vector<EpisodeRecord>> results(static_cast<std::size_t>(W));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(W));
    std::vector<std::string> where(static_cast<std::size_t>(W));
    auto work = [&](int w) {
      const auto wi = static_cast<std::size_t>(w);
      for (std::size_t l : pending) {
        const long n = round * W + w;
        try {
          Rng rng = seed_stream(plan.seed, static_cast<std::uint64_t>(plan.iteration), static_cast<std::uint64_t>(w),
                                (static_cast<std::uint64_t>(l) << 40) + static_cast<std::uint64_t>(n));
          results[wi].push_back(play_learner_episode(plan, l, n, *games[wi], store, rng));
        } catch (...) {
          errors[wi] = std::current_exception();
          where[wi] = "iteration " + std::to_string(plan.iteration) + ", worker " + std::to_string(w) + ", learner " +
                      std::to_string(l) + ", episode " + std::to_string(n) + ": ";
          return;
        }
      }
    };
    if (W == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < W; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }
    for (std::size_t w = 0; w < errors.size(); ++w) {
      if (!errors[w]) continue;
      try {
        std::rethrow_exception(errors[w]);
      } catch (const ContractViolation& e) {
        throw ContractViolation(where[w] + e.what());
      }
    }
    // Merge in (learner, worker) order so the batch does not depend on thread timing.
    for (std::size_t l : pending)
      for (auto& r : results)
        for (auto& e : r)
          if (e.learner == l) {
            steps[l] += e.length;
            batch.episodes[l].push_back(std::move(e));
          }
  }
  return batch;
}

}  // namespace selfplay
