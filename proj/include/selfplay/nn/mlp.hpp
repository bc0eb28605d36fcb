#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/nn/tensor.hpp"

namespace selfplay {

enum class Activation : std::uint32_t { Tanh = 0, Relu = 1, Identity = 2 };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw ContractViolation("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
  }
  return x;
}

struct DenseLayer {
  RealMatrix weight;  // out x in
  RealVector bias;    // out
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation hidden_activation = Activation::Tanh;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
  std::size_t tensor_count() const { return 2 * layers.size(); }
};

inline void check_chain(const MlpParams& p) {
  require(!p.layers.empty(), "mlp has no layers");
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    require(l.bias.size() == l.weight.rows(), "mlp bias length does not match weight rows");
    if (k + 1 < p.layers.size())
      require(p.layers[k + 1].weight.cols() == l.weight.rows(), "mlp layer shapes do not chain");
  }
}

// Weights uniform in +-sqrt(1/fan_in), biases zero.
template <class Rng>
MlpParams make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t output_dim, Activation act, Rng& rng) {
  MlpParams p;
  p.hidden_activation = act;
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const double bound = std::sqrt(1.0 / static_cast<double>(dims[k]));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer l;
    l.weight.resize(dims[k + 1], dims[k]);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
    l.bias = RealVector::Zero(dims[k + 1]);
    p.layers.push_back(std::move(l));
  }
  return p;
}

// Output layer is linear; hidden layers use the configured activation.
inline RealVector mlp_forward(const MlpParams& params, const RealVector& input) {
  require(!params.layers.empty(), "mlp has no layers");
  if (static_cast<std::size_t>(input.size()) != params.input_dim())
    throw ContractViolation("mlp input length " + std::to_string(input.size()) + " != " +
                            std::to_string(params.input_dim()));
  RealVector h = input;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    RealVector z = l.weight * h + l.bias;
    if (k + 1 < params.layers.size())
      z = z.unaryExpr([a = params.hidden_activation](double x) { return activate(a, x); });
    h = std::move(z);
  }
  return h;
}

// Batched forward: rows of `inputs` are samples.
inline RealMatrix mlp_forward_batch(const MlpParams& params, const RealMatrix& inputs) {
  require(static_cast<std::size_t>(inputs.cols()) == params.input_dim(), "mlp batch input width mismatch");
  RealMatrix h = inputs;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    RealMatrix z = h * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (k + 1 < params.layers.size())
      z = z.unaryExpr([a = params.hidden_activation](double x) { return activate(a, x); });
    h = std::move(z);
  }
  return h;
}

// Tensor order: W0, b0, W1, b1, ...; biases become column matrices.
inline void append_tensors(const MlpParams& p, TensorList& out) {
  for (const auto& l : p.layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
}

inline std::size_t assign_tensors(MlpParams& p, const TensorList& ts, std::size_t offset) {
  for (auto& l : p.layers) {
    require(offset + 1 < ts.size(), "tensor list too short");
    const auto& w = ts.at(offset);
    const auto& b = ts.at(offset + 1);
    require(w.rows() == l.weight.rows() && w.cols() == l.weight.cols(), "weight shape mismatch");
    require(b.rows() == l.bias.size() && b.cols() == 1, "bias shape mismatch");
    l.weight = w;
    l.bias = b.col(0);
    offset += 2;
  }
  return offset;
}

inline std::size_t parameter_count(const MlpParams& p) {
  std::size_t n = 0;
  for (const auto& l : p.layers) n += l.weight.size() + l.bias.size();
  return n;
}

}  // namespace selfplay
