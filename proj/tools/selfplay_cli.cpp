#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfplay/eval/protocols.hpp"
#include "selfplay/train/export.hpp"
#include "selfplay/train/trainer.hpp"

using namespace selfplay;

namespace {

// Exit codes: 1 is reserved for unexpected failures.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStorage = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitRun = 5;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_report(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  write_file_atomic(path, text);
  std::cout << "wrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competitive self-play training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  bool resume = false;
  long max_iterations = -1;
  bool verbose = false;
  auto* train = app.add_subcommand("train", "Train (or resume) a run described by a config file");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_flag("--resume", resume, "Continue an existing run directory");
  train->add_option("--max-iterations", max_iterations, "Stop after this many completed iterations");
  train->add_flag("-v,--verbose", verbose, "Print one progress line per learner and iteration");

  std::string runs_arg;
  TournamentOptions topt;
  auto* tournament = app.add_subcommand("tournament", "Pit runs trained with different delta against each other");
  tournament->add_option("--runs", runs_arg, "Comma-separated run directories")->required();
  tournament->add_option("--episodes", topt.episodes, "Episodes per matrix entry and checkpoint");
  tournament->add_option("--burn-in", topt.burn_in, "First checkpoint iteration");
  tournament->add_option("--interval", topt.interval, "Iterations between checkpoints");
  tournament->add_option("--checkpoints", topt.checkpoints, "Number of checkpoints");
  tournament->add_option("--seed", topt.seed, "Evaluation seed");

  std::string annealed_dir, dense_dir;
  AblationOptions aopt;
  auto* ablation = app.add_subcommand("ablation", "Annealed-curriculum run versus never-annealed run");
  ablation->add_option("--annealed", annealed_dir, "Run trained with annealing")->required();
  ablation->add_option("--dense", dense_dir, "Run trained without annealing")->required();
  ablation->add_option("--episodes", aopt.episodes, "Episodes per checkpoint");
  ablation->add_option("--points", aopt.points, "Number of checkpoints");
  ablation->add_option("--seed", aopt.seed, "Evaluation seed");

  std::string transfer_dir, forces_arg = "200,300,400,500,600";
  TransferOptions xopt;
  PerturbationSchedule sched;
  auto* transfer = app.add_subcommand("transfer", "Steps-to-fall of a sumo policy under wind perturbations");
  transfer->add_option("--run", transfer_dir, "Sumo run directory")->required();
  transfer->add_option("--forces", forces_arg, "Comma-separated force levels");
  transfer->add_option("--episodes", xopt.episodes, "Episodes per force level (even)");
  transfer->add_option("--wind-scale", sched.wind_scale, "Simulator force units per schedule unit");
  transfer->add_option("--seed", xopt.seed, "Evaluation seed");

  std::string export_dir;
  auto* exp = app.add_subcommand("export", "Write long-format CSVs for plotting");
  exp->add_option("--run", export_dir, "Run directory")->required();

  std::string balance_dir;
  long balance_burn_in = 0;
  auto* balance = app.add_subcommand("balance", "Training-balance gap between the two roles of a run");
  balance->add_option("--run", balance_dir, "Run directory")->required();
  balance->add_option("--burn-in", balance_burn_in, "Ignore iterations before this one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) {
      const auto cfg = load_config(config_path);
      TrainOptions opt;
      opt.resume = resume;
      opt.verbose = verbose;
      if (max_iterations >= 0) opt.max_iterations = max_iterations;
      Trainer trainer(cfg, opt);
      const long done = trainer.run();
      std::cout << "completed " << done << " of " << cfg.iterations << " iterations in " << cfg.output_dir << '\n';
    } else if (*tournament) {
      std::vector<RunHandle> handles;
      for (const auto& r : split(runs_arg)) handles.push_back(open_run(r));
      std::vector<const RunHandle*> ptrs;
      for (const auto& h : handles) ptrs.push_back(&h);
      const auto m = delta_tournament(ptrs, topt);
      std::cout << m.summary();
      write_report(handles.front().paths.root / "reports" / "tournament.csv", m.to_csv());
    } else if (*ablation) {
      const auto a = open_run(annealed_dir);
      const auto d = open_run(dense_dir);
      const auto rows = curriculum_ablation(a, d, aopt);
      std::printf("%10s %8s %8s %8s\n", "iteration", "win", "loss", "draw");
      for (const auto& r : rows) std::printf("%10ld %8.3f %8.3f %8.3f\n", r.iteration, r.win, r.loss, r.draw);
      write_report(a.paths.root / "reports" / "ablation.csv", ablation_csv(rows));
    } else if (*transfer) {
      const auto run = open_run(transfer_dir);
      if (run.kind() != GameKind::Sumo) throw RunDirError("transfer needs a sumo run");
      sched.forces.clear();
      for (const auto& f : split(forces_arg)) {
        try {
          sched.forces.push_back(std::stod(f));
        } catch (const std::exception&) {
          throw ConfigError("bad force level '" + f + "'");
        }
      }
      for (double f : sched.forces)
        if (!(f > 0.0)) throw ConfigError("force levels must be positive");
      const auto actor = gaussian_actor(run.policy(0, run.latest_iteration()), xopt.deterministic);
      const auto rows = perturbation_transfer(actor, run.config.game, sched, xopt);
      std::cout << transfer_summary(rows);
      write_report(run.paths.root / "reports" / "transfer.csv", transfer_csv(rows));
    } else if (*exp) {
      const auto run = open_run(export_dir);
      std::cout << "wrote " << export_run(run).string() << '\n';
    } else if (*balance) {
      const auto run = open_run(balance_dir);
      const auto rep = training_balance(run, balance_burn_in);
      std::string csv = "iteration,gap\n";
      for (std::size_t i = 0; i < rep.gaps.size(); ++i)
        csv += std::to_string(rep.iterations[i]) + "," + csv_double(rep.gaps[i]) + "\n";
      std::cout << "mean gap " << rep.mean_gap << '\n';
      write_report(run.paths.root / "reports" / "balance.csv", csv);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RunDirError& e) {
    std::cerr << "run error: " << e.what() << '\n';
    return kExitRun;
  } catch (const StorageError& e) {
    std::cerr << "storage error: " << e.what() << '\n';
    return kExitStorage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
