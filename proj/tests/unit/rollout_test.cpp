#include <cstdlib>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "selfplay/rollout/collect.hpp"

using namespace selfplay;

namespace {

struct Fixture {
  fs::path dir;
  std::unique_ptr<SnapshotStore> store;
  GameConfig game_cfg;
  GameKind kind;
  std::vector<GaussianPolicy> policies;
  std::vector<ValueFunction> values;

  Fixture(GameKind k, int horizon, int roles = 1, const std::string& tag = "")
      : kind(k) {
    dir = fs::temp_directory_path() /
          ("selfplay-rollout-" + tag + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    store = std::make_unique<SnapshotStore>(dir);
    game_cfg.horizon = horizon;
    auto g = make_game(k, game_cfg);
    Rng rng(11);
    for (int r = 0; r < roles; ++r) {
      policies.push_back(make_policy(g->obs_dim(), 2, {16}, Activation::Tanh, rng));
      values.push_back(make_value_function(g->obs_dim(), {16}, Activation::Tanh, rng));
    }
    for (int r = 0; r < roles; ++r)
      for (long v = 0; v <= 4; ++v) {
        auto p = policies[static_cast<std::size_t>(r)];
        p.log_std.array() -= 0.1 * static_cast<double>(v);
        store->put(name(r), v, p);
      }
  }
  ~Fixture() { fs::remove_all(dir); }

  static std::string name(int r) { return "role" + std::to_string(r); }

  IterationPlan plan(long quota, int workers, double alpha = 1.0) const {
    IterationPlan p;
    p.iteration = 3;
    p.quota = quota;
    p.workers = workers;
    p.seed = 77;
    p.delta = 0.5;
    p.value_scale = 100.0;
    p.curriculum = CurriculumState::at(0, 10, true, 0.5, 10);
    p.curriculum.alpha = alpha;
    for (std::size_t r = 0; r < policies.size(); ++r) {
      p.learners.push_back(LearnerSpec{static_cast<int>(r), 0, &policies[r], &values[r]});
      p.pools.push_back({name(static_cast<int>(r))});
    }
    return p;
  }

  GameFactory factory() const {
    return [k = kind, c = game_cfg] { return make_game(k, c); };
  }
};

bool same(const CollectedBatch& a, const CollectedBatch& b) {
  if (a.episodes.size() != b.episodes.size()) return false;
  for (std::size_t l = 0; l < a.episodes.size(); ++l) {
    if (a.episodes[l].size() != b.episodes[l].size()) return false;
    for (std::size_t e = 0; e < a.episodes[l].size(); ++e) {
      const auto& x = a.episodes[l][e];
      const auto& y = b.episodes[l][e];
      if (x.opponent_iteration != y.opponent_iteration || x.slot != y.slot) return false;
      if (x.trajectory.rewards != y.trajectory.rewards || x.trajectory.old_log_probs != y.trajectory.old_log_probs)
        return false;
      for (std::size_t t = 0; t < x.trajectory.length(); ++t)
        if (x.trajectory.raw_actions[t] != y.trajectory.raw_actions[t] ||
            x.trajectory.observations[t] != y.trajectory.observations[t])
          return false;
    }
  }
  return true;
}

}  // namespace

TEST(SeedStream, SameInputsSamePrefix) {
  Rng a = seed_stream(1, 2, 3, 4), b = seed_stream(1, 2, 3, 4);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a(), b());
}

TEST(SeedStream, DistinctWorkersDiffer) {
  Rng a = seed_stream(1, 2, 0, 4), b = seed_stream(1, 2, 1, 4);
  int equal = 0;
  for (int i = 0; i < 10000; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
  std::set<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 20; ++i)
    for (std::uint64_t w = 0; w < 20; ++w)
      for (std::uint64_t e = 0; e < 20; ++e) keys.insert(stream_key(9, i, w, e));
  EXPECT_EQ(keys.size(), 8000u);
}

TEST(Collect, QuotaOfOneGivesOneFullEpisode) {
  Fixture f(GameKind::Sumo, 30);
  auto batch = collect_iteration(f.plan(1, 1), f.factory(), *f.store);
  ASSERT_EQ(batch.episodes[0].size(), 1u);
  const auto& e = batch.episodes[0][0];
  EXPECT_TRUE(e.outcome.terminal());
  EXPECT_EQ(e.trajectory.length(), static_cast<std::size_t>(e.length));
  EXPECT_TRUE(e.trajectory.terminal);
}

TEST(Collect, SamePlanIsBitIdentical) {
  Fixture f(GameKind::Sumo, 40);
  auto a = collect_iteration(f.plan(300, 3), f.factory(), *f.store);
  auto b = collect_iteration(f.plan(300, 3), f.factory(), *f.store);
  EXPECT_TRUE(same(a, b));
  auto c = collect_iteration(f.plan(300, 2), f.factory(), *f.store);
  EXPECT_FALSE(same(a, c));
}

TEST(Collect, ZeroAlphaLeavesOnlyTerminalReward) {
  Fixture f(GameKind::RunToGoal, 40);
  auto batch = collect_iteration(f.plan(200, 2, 0.0), f.factory(), *f.store);
  for (const auto& e : batch.episodes[0]) {
    const auto& r = e.trajectory.rewards;
    for (std::size_t t = 0; t + 1 < r.size(); ++t) EXPECT_EQ(r[t], 0.0);
    EXPECT_EQ(r.back(), e.competition_reward);
    EXPECT_EQ(e.blended_return, e.competition_reward);
  }
}

TEST(Collect, OldLogProbsMatchLearnerParameters) {
  Fixture f(GameKind::KickAndDefend, 40, 2);
  auto plan = f.plan(150, 2);
  auto batch = collect_iteration(plan, f.factory(), *f.store);
  for (std::size_t l = 0; l < 2; ++l)
    for (const auto& e : batch.episodes[l])
      for (std::size_t t = 0; t < e.trajectory.length(); ++t) {
        const auto out = policy_forward(f.policies[l], e.trajectory.observations[t]);
        EXPECT_EQ(log_prob(out.mean, out.log_std, e.trajectory.raw_actions[t]), e.trajectory.old_log_probs[t]);
        EXPECT_EQ(value_forward(f.values[l], e.trajectory.observations[t]) * 100.0, e.trajectory.values[t]);
      }
}

TEST(Collect, QuotaBoundsAndTerminalEpisodes) {
  for (int W : {1, 2, 4}) {
    Fixture f(GameKind::Sumo, 25, 1, std::to_string(W));
    const long quota = 130;
    auto batch = collect_iteration(f.plan(quota, W), f.factory(), *f.store);
    const long steps = batch.steps(0);
    EXPECT_GE(steps, quota);
    EXPECT_LE(steps, quota + W * 25);
    EXPECT_EQ(batch.episodes[0].size() % static_cast<std::size_t>(W), 0u);
    for (const auto& e : batch.episodes[0]) EXPECT_TRUE(e.outcome.terminal());
  }
}

TEST(Collect, OpponentTagsRespectDelta) {
  Fixture f(GameKind::Sumo, 20);
  auto batch = collect_iteration(f.plan(400, 2), f.factory(), *f.store);
  std::set<long> seen;
  for (const auto& e : batch.episodes[0]) {
    EXPECT_GE(e.opponent_iteration, 2);  // ceil(0.5 * 4)
    EXPECT_LE(e.opponent_iteration, 4);
    EXPECT_EQ(e.opponent_agent, "role0");
    seen.insert(e.opponent_iteration);
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(Collect, SymmetricLearnerAlternatesSides) {
  Fixture f(GameKind::Sumo, 20);
  auto batch = collect_iteration(f.plan(200, 1), f.factory(), *f.store);
  for (std::size_t e = 0; e < batch.episodes[0].size(); ++e) EXPECT_EQ(batch.episodes[0][e].slot, int(e % 2));
}

TEST(Collect, AsymmetricRolesPlayTheirSideAgainstTheOtherStore) {
  Fixture f(GameKind::YouShallNotPass, 30, 2);
  auto batch = collect_iteration(f.plan(100, 2), f.factory(), *f.store);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_GE(batch.steps(l), 100);
    for (const auto& e : batch.episodes[l]) {
      EXPECT_EQ(e.slot, int(l));
      EXPECT_EQ(e.opponent_agent, Fixture::name(1 - int(l)));
    }
  }
}

TEST(Collect, WorkerFailureCarriesDiagnostics) {
  Fixture f(GameKind::Sumo, 20);
  Rng rng(1);
  auto wrong = make_policy(5, 2, {4}, Activation::Tanh, rng);
  auto plan = f.plan(50, 2);
  plan.learners[0].policy = &wrong;
  try {
    collect_iteration(plan, f.factory(), *f.store);
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("worker"), std::string::npos);
  }
}

TEST(Workers, ResolvedFromConfigThenEnvironment) {
  ::unsetenv("SELFPLAY_WORKERS");
  EXPECT_EQ(resolve_worker_count(0), 1);
  EXPECT_EQ(resolve_worker_count(3), 3);
  ::setenv("SELFPLAY_WORKERS", "5", 1);
  EXPECT_EQ(resolve_worker_count(0), 5);
  EXPECT_EQ(resolve_worker_count(2), 2);
  ::setenv("SELFPLAY_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_worker_count(0), ConfigError);
  ::unsetenv("SELFPLAY_WORKERS");
}
