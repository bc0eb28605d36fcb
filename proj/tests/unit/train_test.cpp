#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "selfplay/train/export.hpp"
#include "selfplay/train/run.hpp"
#include "selfplay/train/trainer.hpp"

using namespace selfplay;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("selfplay-train-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny(const fs::path& out, const std::string& env = "sumo", long iterations = 4) {
  auto c = parse_config("env = " + env +
                        "\n"
                        "net.hidden = 8\n"
                        "ppo.samples_per_iteration = 120\n"
                        "ppo.minibatch = 64\n"
                        "ppo.epochs = 2\n"
                        "game.horizon = 30\n"
                        "curriculum.anneal_horizon = 3\n"
                        "workers = 2\n");
  c.iterations = iterations;
  c.output_dir = out.string();
  return c;
}

long train(const ExperimentConfig& c, TrainOptions o = {}) { return Trainer(c, o).run(); }

}  // namespace

TEST(Trainer, ZeroIterationsLeavesAValidEmptyRun) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 0);
  EXPECT_EQ(train(c), 0);
  auto run = open_run(d.path / "run");
  EXPECT_EQ(run.manifest.completed_iterations, 0);
  EXPECT_EQ(read_file(run.paths.train_csv()), std::string(kTrainCsvHeader) + "\n");
  EXPECT_EQ(run.latest_iteration(), 0);
}

TEST(Trainer, WritesOneRowPerLearnerAndIteration) {
  TempDir d;
  auto c = tiny(d.path / "run", "you-shall-not-pass", 3);
  train(c);
  auto run = open_run(d.path / "run");
  const auto rows = parse_train_csv(read_file(run.paths.train_csv()));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].agent, "runner");
  EXPECT_EQ(rows[1].agent, "blocker");
  EXPECT_EQ(rows[4].iteration, 2);
  for (const auto& r : rows) {
    EXPECT_GE(r.steps, 120);
    EXPECT_EQ(r.wins + r.losses + r.draws, r.episodes);
  }
  EXPECT_EQ(run.store->list("runner"), (std::vector<long>{0, 1, 2, 3}));
  EXPECT_EQ(run.manifest.completed_iterations, 3);
}

TEST(Trainer, SameConfigGivesByteIdenticalLogs) {
  TempDir d;
  auto a = tiny(d.path / "a");
  auto b = tiny(d.path / "b");
  train(a);
  train(b);
  EXPECT_EQ(read_file(d.path / "a" / "train.csv"), read_file(d.path / "b" / "train.csv"));
  EXPECT_EQ(read_file(d.path / "a" / "checkpoint.bin"), read_file(d.path / "b" / "checkpoint.bin"));
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  TempDir d;
  auto full = tiny(d.path / "full", "kick-and-defend", 5);
  train(full);
  auto part = tiny(d.path / "part", "kick-and-defend", 5);
  TrainOptions stop;
  stop.max_iterations = 2;
  EXPECT_EQ(train(part, stop), 2);
  TrainOptions resume;
  resume.resume = true;
  EXPECT_EQ(train(part, resume), 5);
  EXPECT_EQ(read_file(d.path / "full" / "train.csv"), read_file(d.path / "part" / "train.csv"));
  EXPECT_EQ(read_file(d.path / "full" / "checkpoint.bin"), read_file(d.path / "part" / "checkpoint.bin"));
}

TEST(Trainer, ResumeDiscardsWorkPastTheCheckpoint) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 3);
  train(c);
  const std::string expected_csv = read_file(d.path / "run" / "train.csv");
  // Simulate a crash during iteration 3: a stray log row and snapshot beyond the checkpoint.
  {
    std::ofstream(d.path / "run" / "train.csv", std::ios::app) << "3,player,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n";
    SnapshotStore store(d.path / "run" / "snapshots");
    store.put("player", 4, *store.get("player", 3).policy);
  }
  auto longer = c;
  longer.iterations = 3;
  TrainOptions resume;
  resume.resume = true;
  train(longer, resume);
  EXPECT_EQ(read_file(d.path / "run" / "train.csv"), expected_csv);
  EXPECT_EQ(SnapshotStore(d.path / "run" / "snapshots").list("player").back(), 3);
}

TEST(Trainer, RefusesToOverwriteOrResumeWithADifferentConfig) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 1);
  train(c);
  EXPECT_THROW(train(c), ConfigError);
  auto other = c;
  other.seed = 99;
  TrainOptions resume;
  resume.resume = true;
  EXPECT_THROW(train(other, resume), ConfigError);
}

TEST(Trainer, EnsembleMembersAndStride) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 4);
  c.ensemble_size = 3;
  c.sampler.stride = 2;
  train(c);
  auto run = open_run(d.path / "run");
  EXPECT_EQ(run.manifest.agents, (std::vector<std::string>{"player-m0", "player-m1", "player-m2"}));
  EXPECT_EQ(run.store->list("player-m1"), (std::vector<long>{0, 2, 4}));
  const auto rows = parse_train_csv(read_file(run.paths.train_csv()));
  EXPECT_EQ(rows.size(), 12u);
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(3);
  Checkpoint c;
  c.completed = 17;
  c.agents = {"x", "y"};
  for (int i = 0; i < 2; ++i)
    c.learners.push_back(make_learner(make_policy(5, 2, {4}, Activation::Tanh, rng),
                                      make_value_function(5, {4}, Activation::Tanh, rng)));
  c.learners[1].adam.step = 9;
  const auto bytes = serialize_checkpoint(c);
  const auto back = deserialize_checkpoint(bytes);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_EQ(back.completed, 17);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), IntegrityError);
}

TEST(RunDir, MissingOrCorruptRunsAreRejected) {
  TempDir d;
  EXPECT_THROW(open_run(d.path / "nothing"), RunDirError);
  auto c = tiny(d.path / "run", "sumo", 1);
  train(c);
  {
    std::ofstream f(d.path / "run" / "checkpoint.bin", std::ios::app);
    f << "x";
  }
  EXPECT_THROW(open_run(d.path / "run"), RunDirError);
}

TEST(Export, SchedulesAreExactAndReexportIsIdempotent) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 5);
  train(c);
  auto run = open_run(d.path / "run");
  const auto dir = export_run(run);
  const std::string first = read_file(dir / "schedules.csv") + read_file(dir / "rewards.csv") +
                            read_file(dir / "winrates.csv");
  export_run(run);
  EXPECT_EQ(read_file(dir / "schedules.csv") + read_file(dir / "rewards.csv") + read_file(dir / "winrates.csv"),
            first);
  std::istringstream in(read_file(dir / "schedules.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,metric,value");
  int alphas = 0;
  while (std::getline(in, line)) {
    long it = 0;
    char metric[16] = {};
    double v = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%ld,%15[a-z],%lf", &it, metric, &v), 3);
    if (std::string(metric) == "alpha") {
      EXPECT_EQ(v, std::max(0.0, 1.0 - static_cast<double>(it) / 3.0));
      ++alphas;
    }
  }
  EXPECT_EQ(alphas, 5);
}

TEST(Export, EmptyRunGivesHeaderOnlyTables) {
  TempDir d;
  auto c = tiny(d.path / "run", "sumo", 0);
  train(c);
  const auto dir = export_run(open_run(d.path / "run"));
  for (auto f : {"rewards.csv", "winrates.csv", "schedules.csv"})
    EXPECT_EQ(read_file(dir / f), "iteration,metric,value\n");
}
