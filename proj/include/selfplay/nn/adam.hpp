#pragma once

#include <cmath>
#include <cstdint>

#include "selfplay/errors.hpp"
#include "selfplay/nn/tensor.hpp"

namespace selfplay {

struct AdamState {
  TensorList first_moment;
  TensorList second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamState make_adam(const TensorList& params, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8) {
  return AdamState{zeros_like(params), zeros_like(params), 0, beta1, beta2, epsilon};
}

// Bias-corrected Adam; updates params and state in place.
inline void adam_step(AdamState& state, TensorList& params, const TensorList& grad, double lr) {
  require(same_shapes(params, grad), "adam_step: gradient shape mismatch");
  require(same_shapes(params, state.first_moment) && same_shapes(params, state.second_moment),
          "adam_step: moment shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grad[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    params[i].array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace selfplay
