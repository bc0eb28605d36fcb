#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "selfplay/eval/match.hpp"
#include "selfplay/train/run.hpp"

namespace selfplay {

// ---------------------------------------------------------------------------
// Win-rate matrix

// entries[i][j]: win rate of row i against column j; the diagonal is undefined (NaN).
struct WinRateMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> entries;

  std::size_t size() const { return labels.size(); }

  // E[Win] of row i: mean of its defined off-diagonal entries.
  double expected_win(std::size_t i) const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < size(); ++j)
      if (j != i) s += entries[i][j], ++n;
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }
  // E[Loss] of column j: mean of the rates at which the other rows beat it.
  double expected_loss(std::size_t j) const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i)
      if (i != j) s += entries[i][j], ++n;
    return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }

  std::string to_csv() const {
    std::ostringstream ss;
    ss << "row,column,win_rate\n";
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (i != j) ss << labels[i] << ',' << labels[j] << ',' << csv_double(entries[i][j]) << '\n';
    ss << "\nlabel,expected_win,expected_loss\n";
    for (std::size_t i = 0; i < size(); ++i)
      ss << labels[i] << ',' << csv_double(expected_win(i)) << ',' << csv_double(expected_loss(i)) << '\n';
    return ss.str();
  }

  std::string summary() const {
    std::ostringstream ss;
    ss << "win rate of row vs column\n" << std::setw(10) << "";
    for (const auto& l : labels) ss << std::setw(10) << l;
    ss << std::setw(10) << "E[Win]" << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
      ss << std::setw(10) << labels[i];
      for (std::size_t j = 0; j < size(); ++j) {
        if (i == j) ss << std::setw(10) << "-";
        else ss << std::setw(10) << std::fixed << std::setprecision(3) << entries[i][j];
      }
      ss << std::setw(10) << std::fixed << std::setprecision(3) << expected_win(i) << '\n';
    }
    ss << std::setw(10) << "E[Loss]";
    for (std::size_t j = 0; j < size(); ++j) ss << std::setw(10) << std::fixed << std::setprecision(3) << expected_loss(j);
    ss << '\n';
    return ss.str();
  }
};

inline Contestant run_contestant(const RunHandle& run, long iteration, bool deterministic = true) {
  return policy_contestant(run.policy(0, iteration), run.policy(1, iteration), deterministic);
}

inline std::unique_ptr<MarkovGame> evaluation_game(const RunHandle& run) {
  return make_game(run.kind(), run.config.game);
}

struct TournamentOptions {
  long burn_in = 200;
  long interval = 50;
  long checkpoints = 5;
  long episodes = 200;
  std::uint64_t seed = 0;
  double kappa = 1.0;
};

inline std::vector<long> checkpoint_iterations(const TournamentOptions& o) {
  std::vector<long> its;
  for (long k = 0; k < o.checkpoints; ++k) its.push_back(o.burn_in + k * o.interval);
  return its;
}

inline std::string delta_label(double delta) {
  std::ostringstream ss;
  ss << delta;
  return ss.str();
}

// Groups runs by their sampler.delta; entry (i, j) averages the win rate of every
// run of group i against every run of group j over all checkpoints.
inline WinRateMatrix delta_tournament(const std::vector<const RunHandle*>& runs, const TournamentOptions& opt) {
  require(!runs.empty(), "tournament needs at least one run");
  std::map<double, std::vector<const RunHandle*>> groups;
  for (const auto* r : runs) {
    if (r->kind() != runs.front()->kind()) throw RunDirError("tournament runs must share one environment");
    groups[r->config.sampler.delta].push_back(r);
  }
  const auto its = checkpoint_iterations(opt);
  for (const auto* r : runs) {
    const auto have = r->common_iterations();
    for (long c : its)
      if (!std::binary_search(have.begin(), have.end(), c))
        throw RunDirError(r->paths.root.string() + ": no snapshot for checkpoint iteration " + std::to_string(c));
  }
  WinRateMatrix m;
  std::vector<std::vector<const RunHandle*>> members;
  for (const auto& [d, rs] : groups) {
    m.labels.push_back(delta_label(d));
    members.push_back(rs);
  }
  const std::size_t n = m.labels.size();
  m.entries.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  auto game = evaluation_game(*runs.front());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0.0;
      long count = 0;
      for (const auto* ra : members[i])
        for (const auto* rb : members[j])
          for (long c : its) {
            MatchOptions mo;
            mo.seed = opt.seed + static_cast<std::uint64_t>(c);
            mo.kappa = opt.kappa;
            s += play_episodes(run_contestant(*ra, c), run_contestant(*rb, c), *game, opt.episodes, mo).win_rate_a();
            ++count;
          }
      m.entries[i][j] = s / static_cast<double>(count);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Curriculum ablation

struct AblationRow {
  long iteration = 0;
  double win = 0.0;
  double loss = 0.0;
  double draw = 0.0;
};

struct AblationOptions {
  long episodes = 800;
  long points = 5;  // evenly spaced checkpoints, always including the last common one
  std::uint64_t seed = 0;
  double kappa = 1.0;
};

inline std::vector<long> ablation_checkpoints(const std::vector<long>& common, long points) {
  require(points >= 1, "ablation needs at least one checkpoint");
  if (common.empty()) return {};
  std::vector<long> out;
  const auto n = static_cast<long>(common.size());
  for (long k = 0; k < points; ++k) {
    const long idx = (n - 1) - (n - 1) * (points - 1 - k) / std::max(1L, points - 1);
    const long it = common[static_cast<std::size_t>(points == 1 ? n - 1 : idx)];
    if (out.empty() || out.back() != it) out.push_back(it);
  }
  return out;
}

// Win/loss/draw rates of the first run against the second at shared checkpoints.
inline std::vector<AblationRow> curriculum_ablation(const RunHandle& annealed, const RunHandle& dense,
                                                    const AblationOptions& opt) {
  if (annealed.kind() != dense.kind()) throw RunDirError("ablation runs must share one environment");
  const auto a = annealed.common_iterations();
  const auto b = dense.common_iterations();
  std::vector<long> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  if (common.empty()) throw RunDirError("ablation runs share no snapshot iterations");
  auto game = evaluation_game(annealed);
  std::vector<AblationRow> rows;
  for (long c : ablation_checkpoints(common, opt.points)) {
    MatchOptions mo;
    mo.seed = opt.seed + static_cast<std::uint64_t>(c);
    mo.kappa = opt.kappa;
    const auto r = play_episodes(run_contestant(annealed, c), run_contestant(dense, c), *game, opt.episodes, mo);
    rows.push_back({c, r.win_rate_a(), r.win_rate_b(), r.draw_rate()});
  }
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "iteration,win,loss,draw\n";
  for (const auto& r : rows)
    s += std::to_string(r.iteration) + "," + csv_double(r.win) + "," + csv_double(r.loss) + "," + csv_double(r.draw) +
         "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Training balance

struct TrainRow {
  long iteration = 0;
  std::string agent;
  double alpha = 0.0;
  double kappa = 0.0;
  long steps = 0, episodes = 0, wins = 0, losses = 0, draws = 0;
  double mean_length = 0.0, mean_dense_return = 0.0, mean_competition_reward = 0.0;
};

inline std::vector<TrainRow> parse_train_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrainCsvHeader) throw IntegrityError("train.csv header mismatch");
  std::vector<TrainRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 19) throw IntegrityError("malformed train.csv row: " + line);
    TrainRow r;
    try {
      r.iteration = std::stol(f[0]);
      r.agent = f[1];
      r.alpha = std::stod(f[2]);
      r.kappa = std::stod(f[3]);
      r.steps = std::stol(f[4]);
      r.episodes = std::stol(f[5]);
      r.wins = std::stol(f[6]);
      r.losses = std::stol(f[7]);
      r.draws = std::stol(f[8]);
      r.mean_length = std::stod(f[9]);
      r.mean_dense_return = std::stod(f[10]);
      r.mean_competition_reward = std::stod(f[11]);
    } catch (const std::logic_error&) {
      throw IntegrityError("malformed train.csv row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

struct BalanceReport {
  std::vector<long> iterations;
  std::vector<double> gaps;
  double mean_gap = 0.0;  // over iterations >= burn_in
};

// Gap per iteration: |mean competition reward of role 0 - that of role 1|, each role's
// value averaged over its ensemble members.
inline BalanceReport training_balance(const std::vector<TrainRow>& rows, const std::vector<std::vector<std::string>>& pools,
                                      long burn_in = 0) {
  if (pools.size() != 2) throw IntegrityError("training balance needs a two-role run");
  std::map<std::string, int> role_of;
  for (int r = 0; r < 2; ++r)
    for (const auto& a : pools[static_cast<std::size_t>(r)]) role_of[a] = r;
  std::map<long, std::array<std::pair<double, int>, 2>> acc;
  for (const auto& row : rows) {
    auto it = role_of.find(row.agent);
    if (it == role_of.end()) throw IntegrityError("unknown agent '" + row.agent + "' in train.csv");
    auto& slot = acc[row.iteration][static_cast<std::size_t>(it->second)];
    slot.first += row.mean_competition_reward;
    ++slot.second;
  }
  BalanceReport rep;
  double sum = 0.0;
  long n = 0;
  for (const auto& [it, roles] : acc) {
    if (roles[0].second == 0 || roles[1].second == 0) throw IntegrityError("train.csv lacks a role at iteration " + std::to_string(it));
    const double gap = std::abs(roles[0].first / roles[0].second - roles[1].first / roles[1].second);
    rep.iterations.push_back(it);
    rep.gaps.push_back(gap);
    if (it >= burn_in) sum += gap, ++n;
  }
  rep.mean_gap = n ? sum / static_cast<double>(n) : 0.0;
  return rep;
}

inline BalanceReport training_balance(const RunHandle& run, long burn_in = 0) {
  try {
    return training_balance(parse_train_csv(read_file(run.paths.train_csv())), run.pools, burn_in);
  } catch (const StorageError& e) {
    throw RunDirError(run.paths.root.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Perturbation transfer

struct PerturbationSchedule {
  std::vector<double> forces{200, 300, 400, 500, 600};
  long interval = 50;
  double decay = 0.9;
  long stabilization = 50;
  long episode_cap = 500;
  // Converts schedule magnitudes to simulator force units.
  double wind_scale = 0.01;

  void validate() const {
    for (double f : forces)
      if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("perturbation forces must be finite and non-negative");
    if (interval < 1 || stabilization < 0 || episode_cap < 1) throw ConfigError("bad perturbation timing");
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("perturbation decay must lie in (0,1]");
    if (!(wind_scale > 0.0)) throw ConfigError("wind scale must be positive");
  }

  // F_t for t counted from the end of stabilization: F * decay^(t mod interval).
  double magnitude(double force, long t) const {
    require(t >= 0, "schedule time must be non-negative");
    return force * std::pow(decay, static_cast<double>(t % interval));
  }
};

struct TransferRow {
  double force = 0.0;
  long episodes = 0;
  double mean_steps = 0.0;
  double std_steps = 0.0;  // population standard deviation
  double mean_inward = 0.0;
  double mean_outward = 0.0;
};

struct TransferOptions {
  long episodes = 200;
  std::uint64_t seed = 0;
  double kappa = 1.0;
  bool deterministic = true;
};

// Steps survived by a solo sumo agent (opponent inputs zeroed) under radial wind.
// Forcing starts after the stabilization period; the episode ends when the agent
// falls, leaves the ring, or reaches the cap.
inline long transfer_episode(const Actor& actor, const GameConfig& base, const PerturbationSchedule& sched,
                             double force, bool inward, double kappa, Rng& reset_rng, Rng& act_rng) {
  GameConfig cfg = base;
  cfg.horizon = static_cast<int>(sched.episode_cap);
  Sumo game(cfg);
  game.set_solo(true);
  const auto hidden = game.opponent_feature_indices();
  auto obs = game.reset(reset_rng, kappa);
  long t = 0;
  while (true) {
    RealVector o = obs[0];
    for (auto k : hidden) o(static_cast<Eigen::Index>(k)) = 0.0;
    Vec2 wind = Vec2::Zero();
    if (t >= sched.stabilization) {
      const Vec2 p = game.state().bodies[0].pos;
      const Vec2 radial = p.norm() > 1e-12 ? Vec2(p / p.norm()) : Vec2(1.0, 0.0);
      wind = (inward ? -1.0 : 1.0) * sched.magnitude(force, t - sched.stabilization) * sched.wind_scale * radial;
    }
    game.set_external_forces({wind, Vec2::Zero()});
    auto step = game.step({actor(o, act_rng), RealVector::Zero(2)});
    ++t;
    obs = std::move(step.observations);
    if (step.done) return t;
  }
}

inline std::vector<TransferRow> perturbation_transfer(const Actor& actor, const GameConfig& game_cfg,
                                                      const PerturbationSchedule& sched, const TransferOptions& opt) {
  sched.validate();
  require(opt.episodes >= 2 && opt.episodes % 2 == 0, "transfer needs an even, positive episode count");
  std::vector<TransferRow> rows;
  for (double force : sched.forces) {
    TransferRow row;
    row.force = force;
    std::vector<double> steps;
    double in_sum = 0.0, out_sum = 0.0;
    for (long e = 0; e < opt.episodes; ++e) {
      const bool inward = e % 2 == 0;
      Rng reset_rng = seed_stream(opt.seed, static_cast<std::uint64_t>(e / 2), kEvalStream, 0);
      Rng act_rng = seed_stream(opt.seed, static_cast<std::uint64_t>(e), kEvalStream, 1);
      const double n = static_cast<double>(
          transfer_episode(actor, game_cfg, sched, force, inward, opt.kappa, reset_rng, act_rng));
      steps.push_back(n);
      (inward ? in_sum : out_sum) += n;
    }
    const double count = static_cast<double>(steps.size());
    row.episodes = opt.episodes;
    row.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / count;
    double var = 0.0;
    for (double v : steps) var += (v - row.mean_steps) * (v - row.mean_steps);
    row.std_steps = std::sqrt(var / count);
    row.mean_inward = in_sum / (count / 2.0);
    row.mean_outward = out_sum / (count / 2.0);
    rows.push_back(row);
  }
  return rows;
}

inline std::string transfer_csv(const std::vector<TransferRow>& rows) {
  std::string s = "force,episodes,mean_steps,std_steps,mean_inward,mean_outward\n";
  for (const auto& r : rows)
    s += csv_double(r.force) + "," + std::to_string(r.episodes) + "," + csv_double(r.mean_steps) + "," +
         csv_double(r.std_steps) + "," + csv_double(r.mean_inward) + "," + csv_double(r.mean_outward) + "\n";
  return s;
}

// Table layout: one "mean ± std" cell per force level.
inline std::string transfer_summary(const std::vector<TransferRow>& rows) {
  std::ostringstream head, cells;
  head << std::left << std::setw(14) << "force";
  cells << std::left << std::setw(14) << "steps to fall";
  for (const auto& r : rows) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(0) << r.mean_steps << " ± " << r.std_steps;
    head << std::setw(14) << csv_double(r.force);
    cells << std::setw(15) << c.str();
  }
  return head.str() + "\n" + cells.str() + "\n";
}

}  // namespace selfplay
