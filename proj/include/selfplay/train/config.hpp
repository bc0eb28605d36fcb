#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "selfplay/env/game.hpp"
#include "selfplay/errors.hpp"
#include "selfplay/nn/mlp.hpp"
#include "selfplay/ppo/ppo.hpp"
#include "selfplay/store/snapshot_store.hpp"

namespace selfplay {

struct ExperimentConfig {
  std::string env = "run-to-goal";
  std::uint64_t seed = 1;
  long iterations = 500;
  int workers = 0;  // 0: SELFPLAY_WORKERS or 1
  std::string output_dir = "runs/default";

  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::Tanh;
  double init_log_std = 0.0;

  PpoConfig ppo;
  SamplerConfig sampler;
  std::size_t ensemble_size = 1;

  bool anneal = true;
  long anneal_horizon = 0;  // 0: game default (1000 for kick-and-defend, else 500)
  double kappa0 = 0.1;
  long randomization_ramp = 500;

  GameConfig game;

  GameKind kind() const { return game_kind_from_name(env); }
  long effective_anneal_horizon() const {
    if (anneal_horizon > 0) return anneal_horizon;
    return kind() == GameKind::KickAndDefend ? 1000 : 500;
  }

  void validate() const {
    (void)kind();
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (hidden.empty()) throw ConfigError("net.hidden needs at least one layer");
    for (auto h : hidden)
      if (h == 0) throw ConfigError("net.hidden sizes must be positive");
    ppo.validate();
    sampler.validate();
    if (ensemble_size < 1) throw ConfigError("ensemble.size must be >= 1");
    if (anneal_horizon < 0) throw ConfigError("curriculum.anneal_horizon must be >= 0");
    if (!(kappa0 >= 0.0 && kappa0 <= 1.0)) throw ConfigError("curriculum.kappa0 must lie in [0,1]");
    if (game.horizon < 1) throw ConfigError("game.horizon must be >= 1");
    const auto& p = game.physics;
    if (!(p.dt > 0 && p.body_mass > 0 && p.body_radius > 0 && p.ball_mass > 0 && p.ball_radius > 0 && p.max_force > 0))
      throw ConfigError("physics constants must be positive");
    if (p.drag < 0 || p.ball_drag < 0 || p.restitution < 0 || p.restitution > 1)
      throw ConfigError("physics drag must be >= 0 and restitution in [0,1]");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>("", v); },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

// Accessor-based numeric field for nested members.
template <class T, class Access>
Field nested_field(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v) { access(c) = parse_number<T>("", v); },
          [access](const ExperimentConfig& c) {
            auto& m = access(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format_double(m);
            else return std::to_string(m);
          }};
}

#define SELFPLAY_NESTED(type, expr) nested_field<type>([](ExperimentConfig& c) -> type& { return c.expr; })

inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"env", {[](ExperimentConfig& c, const std::string& v) { c.env = v; },
               [](const ExperimentConfig& c) { return c.env; }}},
      {"seed", number_field(&ExperimentConfig::seed)},
      {"iterations", number_field(&ExperimentConfig::iterations)},
      {"workers", number_field(&ExperimentConfig::workers)},
      {"output_dir", {[](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
                      [](const ExperimentConfig& c) { return c.output_dir; }}},
      {"net.hidden",
       {[](ExperimentConfig& c, const std::string& v) {
          c.hidden.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) c.hidden.push_back(parse_number<std::size_t>("net.hidden", trim(item)));
        },
        [](const ExperimentConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
          return s;
        }}},
      {"net.activation",
       {[](ExperimentConfig& c, const std::string& v) {
          try {
            c.activation = activation_from_string(v);
          } catch (const std::exception&) {
            throw ConfigError("bad value for net.activation: '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.activation)); }}},
      {"net.init_log_std", number_field(&ExperimentConfig::init_log_std)},
      {"ppo.clip", SELFPLAY_NESTED(double, ppo.clip)},
      {"ppo.gamma", SELFPLAY_NESTED(double, ppo.gamma)},
      {"ppo.lambda", SELFPLAY_NESTED(double, ppo.lambda)},
      {"ppo.learning_rate", SELFPLAY_NESTED(double, ppo.learning_rate)},
      {"ppo.epochs", SELFPLAY_NESTED(int, ppo.epochs)},
      {"ppo.minibatch", SELFPLAY_NESTED(std::size_t, ppo.minibatch)},
      {"ppo.samples_per_iteration", SELFPLAY_NESTED(std::size_t, ppo.samples_per_iteration)},
      {"ppo.value_coeff", SELFPLAY_NESTED(double, ppo.value_coeff)},
      {"ppo.l2_coeff", SELFPLAY_NESTED(double, ppo.l2_coeff)},
      {"ppo.value_scale", SELFPLAY_NESTED(double, ppo.value_scale)},
      {"ppo.standardize_advantages",
       {[](ExperimentConfig& c, const std::string& v) {
          c.ppo.standardize_advantages = parse_bool("ppo.standardize_advantages", v);
        },
        [](const ExperimentConfig& c) { return std::string(c.ppo.standardize_advantages ? "true" : "false"); }}},
      {"sampler.delta", SELFPLAY_NESTED(double, sampler.delta)},
      {"sampler.stride", SELFPLAY_NESTED(long, sampler.stride)},
      {"ensemble.size", number_field(&ExperimentConfig::ensemble_size)},
      {"curriculum.anneal",
       {[](ExperimentConfig& c, const std::string& v) { c.anneal = parse_bool("curriculum.anneal", v); },
        [](const ExperimentConfig& c) { return std::string(c.anneal ? "true" : "false"); }}},
      {"curriculum.anneal_horizon", number_field(&ExperimentConfig::anneal_horizon)},
      {"curriculum.kappa0", number_field(&ExperimentConfig::kappa0)},
      {"curriculum.randomization_ramp", number_field(&ExperimentConfig::randomization_ramp)},
      {"game.horizon", SELFPLAY_NESTED(int, game.horizon)},
      {"game.start_offset", SELFPLAY_NESTED(double, game.start_offset)},
      {"game.goal_distance", SELFPLAY_NESTED(double, game.goal_distance)},
      {"game.corridor_half_width", SELFPLAY_NESTED(double, game.corridor_half_width)},
      {"game.sumo_start_offset", SELFPLAY_NESTED(double, game.sumo_start_offset)},
      {"game.arena_radius", SELFPLAY_NESTED(double, game.arena_radius)},
      {"game.goal_x", SELFPLAY_NESTED(double, game.goal_x)},
      {"game.goal_half_width", SELFPLAY_NESTED(double, game.goal_half_width)},
      {"game.keeper_depth", SELFPLAY_NESTED(double, game.keeper_depth)},
      {"game.field_length", SELFPLAY_NESTED(double, game.field_length)},
      {"game.field_half_width", SELFPLAY_NESTED(double, game.field_half_width)},
      {"game.ball_offset", SELFPLAY_NESTED(double, game.ball_offset)},
      {"game.kicker_offset", SELFPLAY_NESTED(double, game.kicker_offset)},
      {"game.defender_offset", SELFPLAY_NESTED(double, game.defender_offset)},
      {"game.alive_bonus", SELFPLAY_NESTED(double, game.alive_bonus)},
      {"game.control_cost", SELFPLAY_NESTED(double, game.control_cost)},
      {"game.position_jitter", SELFPLAY_NESTED(double, game.position_jitter)},
      {"game.arena_jitter", SELFPLAY_NESTED(double, game.arena_jitter)},
      {"game.ball_jitter", SELFPLAY_NESTED(double, game.ball_jitter)},
      {"physics.dt", SELFPLAY_NESTED(double, game.physics.dt)},
      {"physics.drag", SELFPLAY_NESTED(double, game.physics.drag)},
      {"physics.max_force", SELFPLAY_NESTED(double, game.physics.max_force)},
      {"physics.body_mass", SELFPLAY_NESTED(double, game.physics.body_mass)},
      {"physics.body_radius", SELFPLAY_NESTED(double, game.physics.body_radius)},
      {"physics.restitution", SELFPLAY_NESTED(double, game.physics.restitution)},
      {"physics.upright_damage", SELFPLAY_NESTED(double, game.physics.upright_damage)},
      {"physics.upright_recovery", SELFPLAY_NESTED(double, game.physics.upright_recovery)},
      {"physics.fall_threshold", SELFPLAY_NESTED(double, game.physics.fall_threshold)},
      {"physics.ball_mass", SELFPLAY_NESTED(double, game.physics.ball_mass)},
      {"physics.ball_radius", SELFPLAY_NESTED(double, game.physics.ball_radius)},
      {"physics.ball_drag", SELFPLAY_NESTED(double, game.physics.ball_drag)},
      {"physics.external_upright_coeff", SELFPLAY_NESTED(double, game.physics.external_upright_coeff)},
  };
  return table;
}

#undef SELFPLAY_NESTED

}  // namespace detail

// Parses flat "key = value" text; '#' starts a comment. Unknown or repeated keys
// are rejected. The result is validated.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, const detail::Field*> index;
  for (const auto& [k, f] : detail::fields()) index[k] = &f;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      it->second->set(c, value);
    } catch (const ConfigError&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for " + key + ": '" + value + "'");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Canonical text form: every key, fixed order, round-trips through parse_config.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, f] : detail::fields()) out += k + " = " + f.get(c) + "\n";
  return out;
}

}  // namespace selfplay
