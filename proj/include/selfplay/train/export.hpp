#pragma once

#include <set>
#include <string>

#include "selfplay/eval/protocols.hpp"

namespace selfplay {

struct ExportFiles {
  std::string rewards;    // iteration,metric,value
  std::string winrates;   // iteration,metric,value
  std::string schedules;  // iteration,metric,value
};

inline std::string export_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Long-format views of train.csv. Schedules are recomputed from the config so
// they are exact; everything else is copied from the log.
inline ExportFiles export_tables(const ExperimentConfig& cfg, const std::vector<TrainRow>& rows) {
  const std::string header = "iteration,metric,value\n";
  ExportFiles f{header, header, header};
  std::set<long> iterations;
  for (const auto& r : rows) {
    iterations.insert(r.iteration);
    const std::string it = std::to_string(r.iteration) + ",";
    f.rewards += it + r.agent + ".mean_dense_return," + csv_double(r.mean_dense_return) + "\n";
    f.rewards += it + r.agent + ".mean_competition_reward," + csv_double(r.mean_competition_reward) + "\n";
    f.rewards += it + r.agent + ".mean_length," + csv_double(r.mean_length) + "\n";
    const double n = static_cast<double>(std::max(1L, r.episodes));
    f.winrates += it + r.agent + ".win_rate," + csv_double(static_cast<double>(r.wins) / n) + "\n";
    f.winrates += it + r.agent + ".loss_rate," + csv_double(static_cast<double>(r.losses) / n) + "\n";
    f.winrates += it + r.agent + ".draw_rate," + csv_double(static_cast<double>(r.draws) / n) + "\n";
  }
  for (long i : iterations) {
    const auto c =
        CurriculumState::at(i, cfg.effective_anneal_horizon(), cfg.anneal, cfg.kappa0, cfg.randomization_ramp);
    f.schedules += std::to_string(i) + ",alpha," + export_double(c.alpha) + "\n";
    f.schedules += std::to_string(i) + ",kappa," + export_double(c.kappa) + "\n";
  }
  return f;
}

inline fs::path export_run(const RunHandle& run) {
  ExportFiles f;
  try {
    f = export_tables(run.config, parse_train_csv(read_file(run.paths.train_csv())));
  } catch (const StorageError& e) {
    throw RunDirError(run.paths.root.string() + ": " + e.what());
  }
  const fs::path dir = run.paths.root / "export";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string());
  write_file_atomic(dir / "rewards.csv", f.rewards);
  write_file_atomic(dir / "winrates.csv", f.winrates);
  write_file_atomic(dir / "schedules.csv", f.schedules);
  return dir;
}

}  // namespace selfplay
