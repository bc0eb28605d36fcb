#pragma once

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/nn/serialize.hpp"
#include "selfplay/util/random.hpp"

namespace selfplay {

namespace fs = std::filesystem;

inline constexpr std::string_view kManifestHeader = "selfplay-snapshot-manifest v1";

struct Snapshot {
  std::string agent;
  long iteration = 0;
  std::shared_ptr<const GaussianPolicy> policy;
  std::int64_t timestamp = 0;
};

struct SamplerConfig {
  double delta = 0.0;
  long stride = 1;

  void validate() const {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
    if (stride < 1) throw ConfigError("snapshot stride must be >= 1");
  }
};

inline std::uint32_t checksum(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary and renames, so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw StorageError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline bool valid_agent_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

// Layout: <root>/<agent>/<iteration, 8 digits>.snap plus <root>/<agent>/manifest.txt.
// Manifest: header line, then one "iteration filename crc32-hex timestamp" line per snapshot.
class SnapshotStore {
 public:
  explicit SnapshotStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw StorageError("cannot create " + root_.string() + ": " + ec.message());
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      const auto manifest = entry.path() / "manifest.txt";
      if (fs::exists(manifest)) agents_[entry.path().filename().string()] = load_manifest(manifest);
    }
  }

  const fs::path& root() const { return root_; }

  void put(const std::string& agent, long v, const GaussianPolicy& policy) {
    if (!valid_agent_name(agent)) throw ContractViolation("invalid agent name '" + agent + "'");
    if (v < 0) throw ContractViolation("snapshot iteration must be non-negative");
    std::unique_lock lock(mutex_);
    auto& entries = agents_[agent];
    if (!entries.empty() && v <= entries.rbegin()->first)
      throw ContractViolation("snapshot iteration " + std::to_string(v) + " for '" + agent +
                              "' does not exceed latest " + std::to_string(entries.rbegin()->first));
    const std::string bytes = serialize_policy(policy);
    const fs::path dir = root_ / agent;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    Entry e;
    e.file = file_name(v);
    e.crc = checksum(bytes);
    e.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
    write_file_atomic(dir / e.file, bytes);
    entries[v] = e;
    write_manifest(agent, entries);
    cache_[{agent, v}] = std::make_shared<const GaussianPolicy>(policy);
  }

  Snapshot get(const std::string& agent, long v) const {
    Entry e;
    {
      std::shared_lock lock(mutex_);
      const auto& entries = entries_of(agent);
      auto it = entries.find(v);
      if (it == entries.end())
        throw ContractViolation("no snapshot " + std::to_string(v) + " for agent '" + agent + "'");
      e = it->second;
      auto c = cache_.find({agent, v});
      if (c != cache_.end()) return Snapshot{agent, v, c->second, e.timestamp};
    }
    const fs::path path = root_ / agent / e.file;
    const std::string bytes = read_file(path);
    if (checksum(bytes) != e.crc) throw IntegrityError("checksum mismatch in " + path.string());
    auto policy = std::make_shared<const GaussianPolicy>(deserialize_policy(bytes));
    std::unique_lock lock(mutex_);
    cache_.emplace(std::pair{agent, v}, policy);
    return Snapshot{agent, v, policy, e.timestamp};
  }

  std::vector<long> list(const std::string& agent) const {
    std::shared_lock lock(mutex_);
    std::vector<long> out;
    auto it = agents_.find(agent);
    if (it == agents_.end()) return out;
    for (const auto& [v, e] : it->second) out.push_back(v);
    return out;
  }

  std::optional<long> latest(const std::string& agent) const {
    std::shared_lock lock(mutex_);
    auto it = agents_.find(agent);
    if (it == agents_.end() || it->second.empty()) return std::nullopt;
    return it->second.rbegin()->first;
  }

  std::vector<std::string> agents() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, e] : agents_) out.push_back(name);
    return out;
  }

  // Drops every snapshot with iteration > v (used when resuming from a checkpoint).
  void truncate_after(const std::string& agent, long v) {
    std::unique_lock lock(mutex_);
    auto it = agents_.find(agent);
    if (it == agents_.end()) return;
    auto& entries = it->second;
    bool changed = false;
    for (auto e = entries.upper_bound(v); e != entries.end();) {
      std::error_code ec;
      fs::remove(root_ / agent / e->second.file, ec);
      cache_.erase({agent, e->first});
      e = entries.erase(e);
      changed = true;
    }
    if (changed) write_manifest(agent, entries);
  }

 private:
  struct Entry {
    std::string file;
    std::uint32_t crc = 0;
    std::int64_t timestamp = 0;
  };
  using Entries = std::map<long, Entry>;

  static std::string file_name(long v) {
    std::ostringstream ss;
    ss << std::setw(8) << std::setfill('0') << v << ".snap";
    return ss.str();
  }

  const Entries& entries_of(const std::string& agent) const {
    auto it = agents_.find(agent);
    if (it == agents_.end()) throw ContractViolation("no snapshots for agent '" + agent + "'");
    return it->second;
  }

  static Entries load_manifest(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != kManifestHeader)
      throw IntegrityError("unrecognized manifest header in " + path.string());
    Entries entries;
    long prev = -1;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      long v = 0;
      Entry e;
      std::string crc_hex;
      if (!(ls >> v >> e.file >> crc_hex >> e.timestamp) || v <= prev)
        throw IntegrityError("malformed manifest line '" + line + "' in " + path.string());
      try {
        e.crc = static_cast<std::uint32_t>(std::stoul(crc_hex, nullptr, 16));
      } catch (const std::exception&) {
        throw IntegrityError("malformed checksum in " + path.string());
      }
      entries[v] = e;
      prev = v;
    }
    return entries;
  }

  void write_manifest(const std::string& agent, const Entries& entries) const {
    std::ostringstream ss;
    ss << kManifestHeader << '\n';
    for (const auto& [v, e] : entries)
      ss << v << ' ' << e.file << ' ' << std::hex << std::setw(8) << std::setfill('0') << e.crc << std::dec
         << std::setfill(' ') << ' ' << e.timestamp << '\n';
    write_file_atomic(root_ / agent / "manifest.txt", ss.str());
  }

  fs::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entries> agents_;
  mutable std::map<std::pair<std::string, long>, std::shared_ptr<const GaussianPolicy>> cache_;
};

// Smallest admissible iteration ⌈δ·v⌉; a tiny tolerance absorbs rounding in δ·v.
inline long delta_floor(double delta, long v) {
  require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
  const long lo = static_cast<long>(std::ceil(delta * static_cast<double>(v) - 1e-9));
  return std::clamp(lo, 0L, v);
}

// Uniform draw over the sorted stored iterations that lie in [⌈δ·v⌉, v], v = the latest one.
inline long sample_iteration(std::span<const long> iterations, double delta, Rng& rng) {
  if (iterations.empty()) throw ContractViolation("cannot sample an opponent from an empty store");
  const long v = iterations.back();
  const auto first = std::lower_bound(iterations.begin(), iterations.end(), delta_floor(delta, v));
  const auto count = static_cast<std::size_t>(iterations.end() - first);
  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  return *(first + static_cast<std::ptrdiff_t>(pick(rng)));
}

inline Snapshot sample_opponent(const SnapshotStore& store, const std::string& agent, double delta, Rng& rng) {
  const auto iterations = store.list(agent);
  return store.get(agent, sample_iteration(iterations, delta, rng));
}

// Uniform over the pool members other than `me`; `me` itself is eligible in symmetric games.
inline std::size_t pick_ensemble_opponent(std::size_t pool_size, std::size_t me, Rng& rng, bool symmetric) {
  require(me < pool_size, "ensemble member index out of range");
  if (symmetric) {
    std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
    return pick(rng);
  }
  if (pool_size < 2) throw ContractViolation("no eligible ensemble opponent in a pool of one");
  std::uniform_int_distribution<std::size_t> pick(0, pool_size - 2);
  const std::size_t k = pick(rng);
  return k >= me ? k + 1 : k;
}

}  // namespace selfplay
