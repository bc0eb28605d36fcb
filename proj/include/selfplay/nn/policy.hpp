#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "selfplay/errors.hpp"
#include "selfplay/nn/mlp.hpp"
#include "selfplay/nn/tensor.hpp"

namespace selfplay {

// Diagonal Gaussian policy: MLP mean, state-independent trainable log-std.
struct GaussianPolicy {
  MlpParams mean_net;
  RealVector log_std;
  RealVector action_low;
  RealVector action_high;

  std::size_t obs_dim() const { return mean_net.input_dim(); }
  std::size_t action_dim() const { return mean_net.output_dim(); }
};

struct ValueFunction {
  MlpParams net;
};

struct PolicyOutput {
  RealVector mean;
  RealVector log_std;
};

struct SampledAction {
  RealVector raw;
  RealVector clipped;
};

inline void check_policy(const GaussianPolicy& p) {
  check_chain(p.mean_net);
  const auto d = static_cast<Eigen::Index>(p.action_dim());
  require(p.log_std.size() == d, "log_std length must equal action dim");
  require(p.action_low.size() == d && p.action_high.size() == d, "action bounds length mismatch");
  require((p.action_low.array() < p.action_high.array()).all(), "action_low must be < action_high");
}

template <class Rng>
GaussianPolicy make_policy(std::size_t obs_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden,
                           Activation act, Rng& rng, double low = -1.0, double high = 1.0) {
  GaussianPolicy p;
  p.mean_net = make_mlp(obs_dim, hidden, action_dim, act, rng);
  p.log_std = RealVector::Zero(action_dim);
  p.action_low = RealVector::Constant(action_dim, low);
  p.action_high = RealVector::Constant(action_dim, high);
  return p;
}

template <class Rng>
ValueFunction make_value_function(std::size_t obs_dim, const std::vector<std::size_t>& hidden, Activation act,
                                  Rng& rng) {
  return ValueFunction{make_mlp(obs_dim, hidden, 1, act, rng)};
}

inline PolicyOutput policy_forward(const GaussianPolicy& policy, const RealVector& obs) {
  return {mlp_forward(policy.mean_net, obs), policy.log_std};
}

inline double value_forward(const ValueFunction& v, const RealVector& obs) { return mlp_forward(v.net, obs)(0); }

inline RealVector clip_action(const RealVector& a, const RealVector& low, const RealVector& high) {
  return a.cwiseMax(low).cwiseMin(high);
}

// Log-probabilities are always taken on `raw`; the environment receives `clipped`.
template <class Rng>
SampledAction sample_action(const RealVector& mean, const RealVector& log_std, const RealVector& low,
                            const RealVector& high, Rng& rng) {
  require(mean.size() == log_std.size(), "sample_action: mean/log_std length mismatch");
  std::normal_distribution<double> n01(0.0, 1.0);
  RealVector raw(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) raw(i) = mean(i) + std::exp(log_std(i)) * n01(rng);
  return {raw, clip_action(raw, low, high)};
}

inline double log_prob(const RealVector& mean, const RealVector& log_std, const RealVector& action) {
  require(mean.size() == log_std.size() && mean.size() == action.size(), "log_prob: length mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double s = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (action(i) - mean(i)) / std::exp(log_std(i));
    s += -0.5 * z * z - log_std(i) - half_log_2pi;
  }
  return s;
}

// Tensor order: mean_net tensors, then log_std (d x 1).
inline TensorList to_tensors(const GaussianPolicy& p) {
  TensorList out;
  append_tensors(p.mean_net, out);
  out.push_back(p.log_std);
  return out;
}

inline void assign_tensors(GaussianPolicy& p, const TensorList& ts) {
  const std::size_t off = assign_tensors(p.mean_net, ts, 0);
  require(off + 1 == ts.size(), "policy tensor list length mismatch");
  require(ts[off].rows() == p.log_std.size() && ts[off].cols() == 1, "log_std shape mismatch");
  p.log_std = ts[off].col(0);
}

inline TensorList to_tensors(const ValueFunction& v) {
  TensorList out;
  append_tensors(v.net, out);
  return out;
}

inline void assign_tensors(ValueFunction& v, const TensorList& ts) {
  require(assign_tensors(v.net, ts, 0) == ts.size(), "value tensor list length mismatch");
}

// coeff * sum of squared weight-matrix elements; biases and log_std excluded.
inline double l2_penalty(const MlpParams& p, double coeff) {
  require(coeff >= 0.0, "l2 coefficient must be non-negative");
  double s = 0.0;
  for (const auto& l : p.layers) s += l.weight.squaredNorm();
  return coeff * s;
}

inline double l2_penalty(const GaussianPolicy& p, double coeff) { return l2_penalty(p.mean_net, coeff); }
inline double l2_penalty(const ValueFunction& v, double coeff) { return l2_penalty(v.net, coeff); }

}  // namespace selfplay
