#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/nn/adam.hpp"
#include "selfplay/nn/policy.hpp"
#include "selfplay/nn/tape.hpp"
#include "selfplay/ppo/gae.hpp"
#include "selfplay/ppo/trajectory.hpp"

namespace selfplay {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.995;
  double lambda = 0.95;
  double learning_rate = 1e-3;
  int epochs = 6;
  std::size_t minibatch = 512;
  double value_coeff = 0.5;
  double l2_coeff = 1e-4;
  std::size_t samples_per_iteration = 4096;
  bool standardize_advantages = true;
  // The value net regresses return / value_scale.
  double value_scale = 100.0;

  void validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo.clip must lie in (0,1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in [0,1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda must lie in [0,1]");
    if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be positive");
    if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
    if (minibatch < 1) throw ConfigError("ppo.minibatch must be >= 1");
    if (samples_per_iteration < 1) throw ConfigError("ppo.samples_per_iteration must be >= 1");
    if (minibatch > samples_per_iteration) throw ConfigError("ppo.minibatch must not exceed ppo.samples_per_iteration");
    if (value_coeff < 0.0 || l2_coeff < 0.0) throw ConfigError("loss coefficients must be non-negative");
    if (!(value_scale > 0.0)) throw ConfigError("ppo.value_scale must be positive");
  }
};

struct UpdateStats {
  double surrogate_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  int adam_steps = 0;
};

inline double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

// Learner parameters for one agent: policy and value net share one Adam state
// over the concatenated tensor list (policy tensors first).
struct Learner {
  GaussianPolicy policy;
  ValueFunction value;
  AdamState adam;

  TensorList tensors() const {
    auto ts = to_tensors(policy);
    auto vs = to_tensors(value);
    ts.insert(ts.end(), vs.begin(), vs.end());
    return ts;
  }

  void assign(const TensorList& ts) {
    const std::size_t np = policy.mean_net.tensor_count() + 1;
    require(ts.size() == np + value.net.tensor_count(), "learner tensor count mismatch");
    assign_tensors(policy, TensorList(ts.begin(), ts.begin() + np));
    assign_tensors(value, TensorList(ts.begin() + np, ts.end()));
  }
};

inline Learner make_learner(GaussianPolicy policy, ValueFunction value) {
  Learner l{std::move(policy), std::move(value), {}};
  l.adam = make_adam(l.tensors());
  return l;
}

// Recorded loss graph for one minibatch.
struct PpoLoss {
  Tape tape;
  Tape::Var total;
  double surrogate = 0.0;   // -mean clipped surrogate
  double value_loss = 0.0;  // mean squared error on scaled returns
  double clip_fraction = 0.0;
  double approx_kl = 0.0;

  double value() const { return tape.scalar(total); }
};

inline PpoLoss ppo_loss(const Batch& batch, std::span<const std::size_t> rows, const GaussianPolicy& policy,
                        const ValueFunction& value_fn, const PpoConfig& cfg) {
  require(!rows.empty(), "ppo_loss: empty minibatch");
  const auto n = static_cast<Eigen::Index>(rows.size());
  RealMatrix obs(n, batch.observations.cols());
  RealMatrix act(n, batch.raw_actions.cols());
  RealMatrix old_lp(n, 1), adv(n, 1), ret(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    require(r < static_cast<Eigen::Index>(batch.size()), "ppo_loss: row out of range");
    obs.row(i) = batch.observations.row(r);
    act.row(i) = batch.raw_actions.row(r);
    old_lp(i, 0) = batch.old_log_probs(r);
    adv(i, 0) = batch.advantages(r);
    ret(i, 0) = batch.returns(r) / cfg.value_scale;
  }

  PpoLoss L;
  auto& t = L.tape;
  const int value_slot0 = static_cast<int>(policy.mean_net.tensor_count()) + 1;
  auto x = t.constant(obs);
  std::vector<Tape::Var> pol_weights, val_weights;
  auto mean = mlp_on_tape(t, policy.mean_net, 0, x, &pol_weights);
  auto log_std = t.parameter(policy.log_std, value_slot0 - 1);
  auto lp = t.gaussian_log_density(mean, log_std, t.constant(act));
  auto ratio = t.exp(t.sub(lp, t.constant(old_lp)));
  auto a = t.constant(adv);
  auto surr = t.minimum(t.mul(ratio, a), t.mul(t.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), a));
  auto pol_loss = t.scale(t.mean(surr), -1.0);

  auto v = mlp_on_tape(t, value_fn.net, value_slot0, x, &val_weights);
  auto v_loss = t.mean(t.square(t.sub(v, t.constant(ret))));

  auto total = t.add(pol_loss, t.scale(v_loss, cfg.value_coeff));
  if (cfg.l2_coeff > 0.0) {
    total = t.add(total, l2_on_tape(t, pol_weights, cfg.l2_coeff));
    total = t.add(total, l2_on_tape(t, val_weights, cfg.l2_coeff));
  }
  L.total = total;
  L.surrogate = t.scalar(pol_loss);
  L.value_loss = t.scalar(v_loss);
  const auto& rv = t.value(ratio);
  L.clip_fraction = ((rv.array() - 1.0).abs() > cfg.clip).cast<double>().mean();
  L.approx_kl = (old_lp - t.value(lp)).mean();
  if (!std::isfinite(L.value())) {
    std::ostringstream os;
    os << "non-finite PPO loss (surrogate=" << L.surrogate << ", value_loss=" << L.value_loss
       << ", max|ratio-1|=" << (rv.array() - 1.0).abs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  return L;
}

// Epoch/minibatch PPO optimisation of one learner on a fixed batch.
template <class Rng>
UpdateStats ppo_update(const Batch& batch, Learner& learner, const PpoConfig& cfg, Rng& rng) {
  require(batch.size() > 0, "ppo_update: empty batch");
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  UpdateStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < idx.size(); start += cfg.minibatch) {
      const std::size_t len = std::min(cfg.minibatch, idx.size() - start);
      std::span<const std::size_t> rows(idx.data() + start, len);
      auto L = ppo_loss(batch, rows, learner.policy, learner.value, cfg);
      auto params = learner.tensors();
      auto grad = L.tape.backward(L.total, params);
      if (!all_finite(grad)) throw NumericalError("non-finite gradient in PPO update");
      stats.surrogate_loss += L.surrogate;
      stats.value_loss += L.value_loss;
      stats.clip_fraction += L.clip_fraction;
      stats.approx_kl += L.approx_kl;
      stats.grad_norm += global_norm(grad);
      adam_step(learner.adam, params, grad, cfg.learning_rate);
      learner.assign(params);
      ++stats.adam_steps;
    }
  }
  const double k = static_cast<double>(stats.adam_steps);
  stats.surrogate_loss /= k;
  stats.value_loss /= k;
  stats.clip_fraction /= k;
  stats.approx_kl /= k;
  stats.grad_norm /= k;
  return stats;
}

}  // namespace selfplay
