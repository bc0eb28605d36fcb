#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selfplay/nn/serialize.hpp"
#include "selfplay/ppo/gae.hpp"
#include "selfplay/ppo/ppo.hpp"
#include "selfplay/rollout/collect.hpp"
#include "selfplay/train/config.hpp"

namespace selfplay {

inline constexpr std::string_view kRunManifestHeader = "selfplay-run-manifest v1";
inline constexpr int kTrainCsvVersion = 1;
inline constexpr std::string_view kTrainCsvHeader =
    "iteration,agent,alpha,kappa,steps,episodes,wins,losses,draws,mean_length,mean_dense_return,"
    "mean_competition_reward,mean_opponent_iteration,surrogate_loss,value_loss,clip_fraction,approx_kl,grad_norm,"
    "adam_steps";

// Learner/agent names: one per (role, ensemble member). Symmetric games have a
// single role; asymmetric games use the game's role names.
inline std::vector<std::vector<std::string>> agent_pools(const ExperimentConfig& cfg) {
  const auto game = make_game(cfg.kind(), cfg.game);
  std::vector<std::string> roles;
  if (game->symmetric()) roles = {"player"};
  else roles = {game->role_names()[0], game->role_names()[1]};
  std::vector<std::vector<std::string>> pools;
  for (const auto& r : roles) {
    std::vector<std::string> pool;
    for (std::size_t m = 0; m < cfg.ensemble_size; ++m)
      pool.push_back(cfg.ensemble_size == 1 ? r : r + "-m" + std::to_string(m));
    pools.push_back(pool);
  }
  return pools;
}

struct RunManifest {
  std::string env;
  std::uint64_t seed = 0;
  long target_iterations = 0;
  long completed_iterations = 0;
  std::uint32_t config_crc = 0;
  std::uint32_t checkpoint_crc = 0;
  std::vector<std::string> agents;

  std::string serialize() const {
    std::ostringstream ss;
    ss << kRunManifestHeader << '\n'
       << "obs_layout " << kObsLayoutVersion << '\n'
       << "param_format " << kParamFormatVersion << '\n'
       << "train_csv " << kTrainCsvVersion << '\n'
       << "env " << env << '\n'
       << "seed " << seed << '\n'
       << "target_iterations " << target_iterations << '\n'
       << "completed_iterations " << completed_iterations << '\n'
       << std::hex << std::setfill('0') << "config_crc32 " << std::setw(8) << config_crc << '\n'
       << "checkpoint_crc32 " << std::setw(8) << checkpoint_crc << '\n'
       << std::dec << "agents";
    for (const auto& a : agents) ss << ' ' << a;
    ss << '\n';
    return ss.str();
  }

  static RunManifest parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kRunManifestHeader) throw IntegrityError("unrecognized run manifest");
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto sp = line.find(' ');
      kv[line.substr(0, sp)] = sp == std::string::npos ? "" : line.substr(sp + 1);
    }
    auto need = [&](const std::string& k) {
      auto it = kv.find(k);
      if (it == kv.end()) throw IntegrityError("run manifest lacks '" + k + "'");
      return it->second;
    };
    if (need("obs_layout") != std::to_string(kObsLayoutVersion) ||
        need("param_format") != std::to_string(kParamFormatVersion) ||
        need("train_csv") != std::to_string(kTrainCsvVersion))
      throw IntegrityError("run manifest format version not supported");
    RunManifest m;
    try {
      m.env = need("env");
      m.seed = std::stoull(need("seed"));
      m.target_iterations = std::stol(need("target_iterations"));
      m.completed_iterations = std::stol(need("completed_iterations"));
      m.config_crc = static_cast<std::uint32_t>(std::stoul(need("config_crc32"), nullptr, 16));
      m.checkpoint_crc = static_cast<std::uint32_t>(std::stoul(need("checkpoint_crc32"), nullptr, 16));
    } catch (const std::logic_error&) {
      throw IntegrityError("malformed run manifest");
    }
    std::istringstream as(need("agents"));
    for (std::string a; as >> a;) m.agents.push_back(a);
    return m;
  }
};

struct RunPaths {
  fs::path root;
  fs::path config() const { return root / "config.txt"; }
  fs::path manifest() const { return root / "manifest.txt"; }
  fs::path checkpoint() const { return root / "checkpoint.bin"; }
  fs::path train_csv() const { return root / "train.csv"; }
  fs::path snapshots() const { return root / "snapshots"; }
};

// Complete learner state after `completed` iterations: parameters plus Adam moments.
struct Checkpoint {
  long completed = 0;
  std::vector<std::string> agents;
  std::vector<Learner> learners;
};

inline std::string serialize_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes("SPCK");
  w.u32(1);
  w.i64(c.completed);
  w.u64(c.learners.size());
  auto blob = [&](const std::string& s) {
    w.u64(s.size());
    w.bytes(s);
  };
  for (std::size_t i = 0; i < c.learners.size(); ++i) {
    blob(c.agents[i]);
    blob(serialize_policy(c.learners[i].policy));
    blob(serialize_value(c.learners[i].value));
    write_adam(w, c.learners[i].adam);
  }
  return w.take();
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != "SPCK" || r.u32() != 1) throw IntegrityError("not a checkpoint file");
  Checkpoint c;
  c.completed = r.i64();
  const auto n = r.u64();
  if (n > 4096) throw IntegrityError("implausible learner count in checkpoint");
  auto blob = [&] { return r.bytes(static_cast<std::size_t>(r.u64())); };
  for (std::uint64_t i = 0; i < n; ++i) {
    c.agents.emplace_back(blob());
    auto policy = deserialize_policy(blob());
    auto value = deserialize_value(blob());
    Learner l{std::move(policy), std::move(value), read_adam(r)};
    c.learners.push_back(std::move(l));
  }
  if (!r.at_end()) throw IntegrityError("trailing bytes in checkpoint");
  return c;
}

inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct TrainOptions {
  bool resume = false;
  // Stop once this many iterations are complete (simulates an interruption).
  std::optional<long> max_iterations;
  bool verbose = false;
};

class Trainer {
 public:
  Trainer(ExperimentConfig cfg, TrainOptions opt) : cfg_(std::move(cfg)), opt_(opt) {
    cfg_.validate();
    paths_.root = cfg_.output_dir;
    pools_ = agent_pools(cfg_);
    for (std::size_t r = 0; r < pools_.size(); ++r)
      for (std::size_t m = 0; m < pools_[r].size(); ++m) {
        agents_.push_back(pools_[r][m]);
        roles_.push_back({static_cast<int>(r), m});
      }
  }

  const RunPaths& paths() const { return paths_; }

  // Runs (or resumes) training; returns the number of completed iterations.
  long run() {
    const bool existing = fs::exists(paths_.manifest());
    if (existing && !opt_.resume)
      throw ConfigError("run directory " + paths_.root.string() + " already holds a run; pass --resume to continue");
    if (existing) restore();
    else initialize();

    const long stop = std::min(cfg_.iterations, opt_.max_iterations.value_or(cfg_.iterations));
    const auto factory = [k = cfg_.kind(), g = cfg_.game] { return make_game(k, g); };
    const int workers = resolve_worker_count(cfg_.workers);
    for (long i = ckpt_.completed; i < stop; ++i) iterate(i, factory, workers);
    return ckpt_.completed;
  }

 private:
  void initialize() {
    std::error_code ec;
    fs::create_directories(paths_.root, ec);
    if (ec) throw StorageError("cannot create " + paths_.root.string() + ": " + ec.message());
    write_file_atomic(paths_.config(), serialize_config(cfg_));
    const auto game = make_game(cfg_.kind(), cfg_.game);
    ckpt_ = Checkpoint{};
    ckpt_.agents = agents_;
    for (std::size_t l = 0; l < agents_.size(); ++l) {
      Rng rng = seed_stream(cfg_.seed, 0, kInitStream, l);
      auto policy = make_policy(game->obs_dim(), game->action_dim(), cfg_.hidden, cfg_.activation, rng);
      policy.log_std.setConstant(cfg_.init_log_std);
      auto value = make_value_function(game->obs_dim(), cfg_.hidden, cfg_.activation, rng);
      ckpt_.learners.push_back(make_learner(std::move(policy), std::move(value)));
    }
    store_ = std::make_unique<SnapshotStore>(paths_.snapshots());
    for (std::size_t l = 0; l < agents_.size(); ++l) store_->put(agents_[l], 0, ckpt_.learners[l].policy);
    write_file_atomic(paths_.train_csv(), std::string(kTrainCsvHeader) + "\n");
    commit();
  }

  void restore() {
    const auto manifest = RunManifest::parse(read_file(paths_.manifest()));
    const std::string stored_cfg = read_file(paths_.config());
    if (checksum(stored_cfg) != manifest.config_crc) throw IntegrityError("config.txt does not match the manifest");
    if (stored_cfg != serialize_config(cfg_))
      throw ConfigError("config differs from the one stored in " + paths_.config().string());
    const std::string bytes = read_file(paths_.checkpoint());
    if (checksum(bytes) != manifest.checkpoint_crc) throw IntegrityError("checkpoint.bin does not match the manifest");
    ckpt_ = deserialize_checkpoint(bytes);
    if (ckpt_.agents != agents_) throw IntegrityError("checkpoint agents do not match the config");
    store_ = std::make_unique<SnapshotStore>(paths_.snapshots());
    for (const auto& a : agents_) store_->truncate_after(a, ckpt_.completed);
    truncate_csv(ckpt_.completed);
  }

  // Drops log rows written after the checkpoint (an interrupted iteration).
  void truncate_csv(long completed) {
    std::istringstream in(read_file(paths_.train_csv()));
    std::string line, out;
    if (!std::getline(in, line) || line != kTrainCsvHeader) throw IntegrityError("train.csv header mismatch");
    out = line + "\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stol(line.substr(0, line.find(','))) < completed) out += line + "\n";
    }
    write_file_atomic(paths_.train_csv(), out);
  }

  void iterate(long i, const GameFactory& factory, int workers) {
    IterationPlan plan;
    plan.iteration = i;
    plan.quota = static_cast<long>(cfg_.ppo.samples_per_iteration);
    plan.workers = workers;
    plan.seed = cfg_.seed;
    plan.curriculum =
        CurriculumState::at(i, cfg_.effective_anneal_horizon(), cfg_.anneal, cfg_.kappa0, cfg_.randomization_ramp);
    plan.delta = cfg_.sampler.delta;
    plan.value_scale = cfg_.ppo.value_scale;
    plan.pools = pools_;
    for (std::size_t l = 0; l < agents_.size(); ++l)
      plan.learners.push_back(
          LearnerSpec{roles_[l].first, roles_[l].second, &ckpt_.learners[l].policy, &ckpt_.learners[l].value});
    const auto batch = collect_iteration(plan, factory, *store_);

    std::string rows;
    for (std::size_t l = 0; l < agents_.size(); ++l) {
      const auto trajs = batch.trajectories(l);
      const Batch b = assemble_batch(trajs, cfg_.ppo.gamma, cfg_.ppo.lambda, cfg_.ppo.standardize_advantages);
      Rng rng = seed_stream(cfg_.seed, static_cast<std::uint64_t>(i), kUpdateStream, l);
      const UpdateStats st = ppo_update(b, ckpt_.learners[l], cfg_.ppo, rng);
      for (const auto& t : ckpt_.learners[l].tensors())
        if (!all_finite(t))
          throw NumericalError("non-finite parameters after update at iteration " + std::to_string(i) + " for " +
                               agents_[l]);
      const auto s = summarize(batch.episodes[l]);
      double opp = 0.0;
      for (const auto& e : batch.episodes[l]) opp += static_cast<double>(e.opponent_iteration);
      opp /= static_cast<double>(std::max<long>(1, s.episodes));
      std::ostringstream row;
      row << i << ',' << agents_[l] << ',' << csv_double(plan.curriculum.alpha) << ','
          << csv_double(plan.curriculum.kappa) << ',' << s.steps << ',' << s.episodes << ',' << s.wins << ','
          << s.losses << ',' << s.draws << ',' << csv_double(s.mean_length) << ','
          << csv_double(s.mean_dense_return) << ',' << csv_double(s.mean_competition_reward) << ','
          << csv_double(opp) << ',' << csv_double(st.surrogate_loss) << ',' << csv_double(st.value_loss) << ','
          << csv_double(st.clip_fraction) << ',' << csv_double(st.approx_kl) << ',' << csv_double(st.grad_norm)
          << ',' << st.adam_steps << '\n';
      rows += row.str();
      if (opt_.verbose)
        std::fprintf(stderr, "iter %ld %s: steps %ld episodes %ld W/L/D %ld/%ld/%ld len %.1f comp %.1f\n", i,
                     agents_[l].c_str(), s.steps, s.episodes, s.wins, s.losses, s.draws, s.mean_length,
                     s.mean_competition_reward);
    }
    if ((i + 1) % cfg_.sampler.stride == 0)
      for (std::size_t l = 0; l < agents_.size(); ++l) store_->put(agents_[l], i + 1, ckpt_.learners[l].policy);
    {
      std::ofstream out(paths_.train_csv(), std::ios::app | std::ios::binary);
      out << rows;
      if (!out) throw StorageError("cannot append to " + paths_.train_csv().string());
    }
    ckpt_.completed = i + 1;
    commit();
  }

  void commit() {
    const std::string bytes = serialize_checkpoint(ckpt_);
    write_file_atomic(paths_.checkpoint(), bytes);
    RunManifest m;
    m.env = std::string(game_name(cfg_.kind()));
    m.seed = cfg_.seed;
    m.target_iterations = cfg_.iterations;
    m.completed_iterations = ckpt_.completed;
    m.config_crc = checksum(serialize_config(cfg_));
    m.checkpoint_crc = checksum(bytes);
    m.agents = agents_;
    write_file_atomic(paths_.manifest(), m.serialize());
  }

  ExperimentConfig cfg_;
  TrainOptions opt_;
  RunPaths paths_;
  std::vector<std::vector<std::string>> pools_;
  std::vector<std::string> agents_;
  std::vector<std::pair<int, std::size_t>> roles_;
  Checkpoint ckpt_;
  std::unique_ptr<SnapshotStore> store_;
};

}  // namespace selfplay
