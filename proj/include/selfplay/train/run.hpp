#pragma once

#include <memory>
#include <string>

#include "selfplay/train/trainer.hpp"

namespace selfplay {

// Read-only view of a finished or in-progress run directory.
struct RunHandle {
  RunPaths paths;
  ExperimentConfig config;
  RunManifest manifest;
  std::vector<std::vector<std::string>> pools;
  std::unique_ptr<SnapshotStore> store;

  GameKind kind() const { return config.kind(); }
  bool symmetric() const { return is_symmetric(kind()); }

  // Agent whose snapshots represent side `slot` (ensemble member 0).
  const std::string& agent_for_slot(int slot) const {
    return pools[symmetric() ? 0 : static_cast<std::size_t>(slot)][0];
  }

  std::shared_ptr<const GaussianPolicy> policy(int slot, long iteration) const {
    try {
      return store->get(agent_for_slot(slot), iteration).policy;
    } catch (const ContractViolation& e) {
      throw RunDirError(paths.root.string() + ": " + e.what());
    } catch (const StorageError& e) {
      throw RunDirError(paths.root.string() + ": " + e.what());
    }
  }

  // Iterations stored for every agent of the run.
  std::vector<long> common_iterations() const {
    std::vector<long> common = store->list(manifest.agents.front());
    for (const auto& a : manifest.agents) {
      const auto its = store->list(a);
      std::vector<long> keep;
      std::set_intersection(common.begin(), common.end(), its.begin(), its.end(), std::back_inserter(keep));
      common = keep;
    }
    return common;
  }
  long latest_iteration() const {
    const auto c = common_iterations();
    if (c.empty()) throw RunDirError(paths.root.string() + ": no snapshots");
    return c.back();
  }
};

inline RunHandle open_run(const fs::path& dir) {
  RunHandle h;
  h.paths.root = dir;
  if (!fs::is_directory(dir)) throw RunDirError("run directory " + dir.string() + " does not exist");
  try {
    h.manifest = RunManifest::parse(read_file(h.paths.manifest()));
    const std::string cfg_text = read_file(h.paths.config());
    if (checksum(cfg_text) != h.manifest.config_crc) throw IntegrityError("config.txt does not match the manifest");
    h.config = parse_config(cfg_text);
    if (checksum(read_file(h.paths.checkpoint())) != h.manifest.checkpoint_crc)
      throw IntegrityError("checkpoint.bin does not match the manifest");
    h.pools = agent_pools(h.config);
    h.store = std::make_unique<SnapshotStore>(h.paths.snapshots());
    for (const auto& a : h.manifest.agents)
      if (!h.store->latest(a)) throw IntegrityError("no snapshots for agent " + a);
  } catch (const RunDirError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunDirError("invalid run directory " + dir.string() + ": " + e.what());
  }
  return h;
}

}  // namespace selfplay
