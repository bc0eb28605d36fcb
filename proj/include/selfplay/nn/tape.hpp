#pragma once

// Reverse-mode differentiation over a small set of batched matrix primitives.
// Every node holds a (rows x cols) value; batch samples are rows.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "selfplay/errors.hpp"
#include "selfplay/nn/mlp.hpp"
#include "selfplay/nn/tensor.hpp"

namespace selfplay {

enum class Op {
  Parameter,
  Constant,
  Affine,
  Activate,
  Add,
  Sub,
  Mul,
  Scale,
  Exp,
  Square,
  Minimum,
  Clip,
  Mean,
  Sum,
  GaussianLogDensity,
};

class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var parameter(const RealMatrix& value, int slot) {
    require(slot >= 0, "parameter slot must be non-negative");
    Node n{Op::Parameter};
    n.slot = slot;
    n.value = value;
    return push(std::move(n));
  }

  Var constant(RealMatrix value) {
    Node n{Op::Constant};
    n.value = std::move(value);
    return push(std::move(n));
  }

  // x: n x in, w: out x in, b: out x 1  ->  n x out
  Var affine(Var x, Var w, Var b) {
    const auto& xv = value(x);
    const auto& wv = value(w);
    const auto& bv = value(b);
    require(xv.cols() == wv.cols(), "affine: input width " + std::to_string(xv.cols()) +
                                        " != weight cols " + std::to_string(wv.cols()));
    require(bv.rows() == wv.rows() && bv.cols() == 1, "affine: bias shape mismatch");
    Node n{Op::Affine};
    n.a = x.id;
    n.b = w.id;
    n.c = b.id;
    n.value = xv * wv.transpose();
    n.value.rowwise() += bv.col(0).transpose();
    return push(std::move(n));
  }

  Var activate(Var x, Activation act) {
    Node n{Op::Activate};
    n.a = x.id;
    n.act = act;
    n.value = value(x).unaryExpr([act](double v) { return selfplay::activate(act, v); });
    return push(std::move(n));
  }

  Var add(Var a, Var b) { return binary(Op::Add, a, b, value(a) + value(b)); }
  Var sub(Var a, Var b) { return binary(Op::Sub, a, b, value(a) - value(b)); }
  Var mul(Var a, Var b) { return binary(Op::Mul, a, b, value(a).cwiseProduct(value(b))); }
  Var minimum(Var a, Var b) { return binary(Op::Minimum, a, b, value(a).cwiseMin(value(b))); }

  Var scale(Var a, double c) {
    Node n{Op::Scale};
    n.a = a.id;
    n.p0 = c;
    n.value = value(a) * c;
    return push(std::move(n));
  }

  Var exp(Var a) {
    Node n{Op::Exp};
    n.a = a.id;
    n.value = value(a).array().exp().matrix();
    return push(std::move(n));
  }

  Var square(Var a) {
    Node n{Op::Square};
    n.a = a.id;
    n.value = value(a).array().square().matrix();
    return push(std::move(n));
  }

  Var clip(Var a, double lo, double hi) {
    require(lo <= hi, "clip: lo > hi");
    Node n{Op::Clip};
    n.a = a.id;
    n.p0 = lo;
    n.p1 = hi;
    n.value = value(a).cwiseMax(lo).cwiseMin(hi);
    return push(std::move(n));
  }

  Var mean(Var a) {
    const auto& v = value(a);
    require(v.size() > 0, "mean of empty tensor");
    Node n{Op::Mean};
    n.a = a.id;
    n.value = RealMatrix::Constant(1, 1, v.mean());
    return push(std::move(n));
  }

  Var sum(Var a) {
    Node n{Op::Sum};
    n.a = a.id;
    n.value = RealMatrix::Constant(1, 1, value(a).sum());
    return push(std::move(n));
  }

  // mean: n x d, log_std: d x 1, action: n x d  ->  n x 1 diagonal-Gaussian log density.
  Var gaussian_log_density(Var mean, Var log_std, Var action) {
    const auto& mu = value(mean);
    const auto& ls = value(log_std);
    const auto& act = value(action);
    require(ls.cols() == 1 && ls.rows() == mu.cols(), "log_std length must equal action dim");
    require(act.rows() == mu.rows() && act.cols() == mu.cols(), "action shape mismatch");
    Node n{Op::GaussianLogDensity};
    n.a = mean.id;
    n.b = log_std.id;
    n.c = action.id;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    n.value.resize(mu.rows(), 1);
    for (Eigen::Index r = 0; r < mu.rows(); ++r) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < mu.cols(); ++j) {
        const double z = (act(r, j) - mu(r, j)) / std::exp(ls(j, 0));
        s += -0.5 * z * z - ls(j, 0) - half_log_2pi;
      }
      n.value(r, 0) = s;
    }
    return push(std::move(n));
  }

  const RealMatrix& value(Var v) const {
    require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), "tape: invalid variable");
    return nodes_[v.id].value;
  }

  double scalar(Var v) const {
    const auto& m = value(v);
    require(m.size() == 1, "tape: value is not a scalar");
    return m(0, 0);
  }

  std::size_t size() const { return nodes_.size(); }

  // Gradient of scalar `root` with respect to every parameter slot. `params`
  // supplies the slot shapes; slots absent from the graph get zero gradient.
  TensorList backward(Var root, const TensorList& params) {
    require(value(root).size() == 1, "backward: root must be scalar");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[root.id].grad = RealMatrix::Ones(1, 1);
    TensorList out = zeros_like(params);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0) continue;
      const RealMatrix& g = n.grad;
      switch (n.op) {
        case Op::Parameter: {
          require(n.slot < static_cast<int>(out.size()), "backward: slot out of range");
          auto& dst = out[n.slot];
          require(dst.rows() == g.rows() && dst.cols() == g.cols(), "backward: slot shape mismatch");
          dst += g;
          break;
        }
        case Op::Constant:
          break;
        case Op::Affine: {
          const auto& x = nodes_[n.a].value;
          const auto& w = nodes_[n.b].value;
          accumulate(n.a, g * w);
          accumulate(n.b, g.transpose() * x);
          accumulate(n.c, g.colwise().sum().transpose());
          break;
        }
        case Op::Activate: {
          const auto& y = n.value;
          switch (n.act) {
            case Activation::Tanh:
              accumulate(n.a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
              break;
            case Activation::Relu:
              accumulate(n.a, (nodes_[n.a].value.array() > 0.0).select(g, 0.0).matrix());
              break;
            case Activation::Identity:
              accumulate(n.a, g);
              break;
          }
          break;
        }
        case Op::Add:
          accumulate(n.a, g);
          accumulate(n.b, g);
          break;
        case Op::Sub:
          accumulate(n.a, g);
          accumulate(n.b, -g);
          break;
        case Op::Mul:
          accumulate(n.a, g.cwiseProduct(nodes_[n.b].value));
          accumulate(n.b, g.cwiseProduct(nodes_[n.a].value));
          break;
        case Op::Scale:
          accumulate(n.a, g * n.p0);
          break;
        case Op::Exp:
          accumulate(n.a, g.cwiseProduct(n.value));
          break;
        case Op::Square:
          accumulate(n.a, 2.0 * g.cwiseProduct(nodes_[n.a].value));
          break;
        case Op::Minimum: {
          // Ties route to the first operand.
          const auto& av = nodes_[n.a].value;
          const auto& bv = nodes_[n.b].value;
          accumulate(n.a, (av.array() <= bv.array()).select(g, 0.0).matrix());
          accumulate(n.b, (av.array() <= bv.array()).select(RealMatrix::Zero(g.rows(), g.cols()), g).matrix());
          break;
        }
        case Op::Clip: {
          const auto& av = nodes_[n.a].value;
          accumulate(n.a, (av.array() >= n.p0 && av.array() <= n.p1).select(g, 0.0).matrix());
          break;
        }
        case Op::Mean: {
          const auto& av = nodes_[n.a].value;
          accumulate(n.a, RealMatrix::Constant(av.rows(), av.cols(), g(0, 0) / static_cast<double>(av.size())));
          break;
        }
        case Op::Sum: {
          const auto& av = nodes_[n.a].value;
          accumulate(n.a, RealMatrix::Constant(av.rows(), av.cols(), g(0, 0)));
          break;
        }
        case Op::GaussianLogDensity: {
          const auto& mu = nodes_[n.a].value;
          const auto& ls = nodes_[n.b].value;
          const auto& act = nodes_[n.c].value;
          RealMatrix dmu(mu.rows(), mu.cols());
          RealMatrix dact(mu.rows(), mu.cols());
          RealMatrix dls = RealMatrix::Zero(ls.rows(), 1);
          for (Eigen::Index r = 0; r < mu.rows(); ++r) {
            for (Eigen::Index j = 0; j < mu.cols(); ++j) {
              const double sigma = std::exp(ls(j, 0));
              const double z = (act(r, j) - mu(r, j)) / sigma;
              dmu(r, j) = g(r, 0) * z / sigma;
              dact(r, j) = -g(r, 0) * z / sigma;
              dls(j, 0) += g(r, 0) * (z * z - 1.0);
            }
          }
          accumulate(n.a, dmu);
          accumulate(n.b, dls);
          accumulate(n.c, dact);
          break;
        }
        default:
          throw ContractViolation("backward: unsupported primitive in graph");
      }
    }
    return out;
  }

 private:
  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    int slot = -1;
    double p0 = 0.0, p1 = 0.0;
    Activation act = Activation::Identity;
    RealMatrix value{};
    RealMatrix grad{};
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var binary(Op op, Var a, Var b, RealMatrix v) {
    const auto& av = value(a);
    const auto& bv = value(b);
    require(av.rows() == bv.rows() && av.cols() == bv.cols(), "elementwise op shape mismatch");
    Node n{op};
    n.a = a.id;
    n.b = b.id;
    n.value = std::move(v);
    return push(std::move(n));
  }

  template <class Expr>
  void accumulate(int id, const Expr& g) {
    if (id < 0) return;
    auto& dst = nodes_[id].grad;
    if (nodes_[id].op == Op::Constant) return;
    if (dst.size() == 0)
      dst = g;
    else
      dst += g;
  }

  std::vector<Node> nodes_;
};

// Records an MLP forward pass; its tensors occupy slots first_slot.. in
// append_tensors order.
inline Tape::Var mlp_on_tape(Tape& tape, const MlpParams& p, int first_slot, Tape::Var x,
                             std::vector<Tape::Var>* weights = nullptr) {
  check_chain(p);
  int slot = first_slot;
  Tape::Var h = x;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    auto w = tape.parameter(l.weight, slot++);
    if (weights) weights->push_back(w);
    auto b = tape.parameter(l.bias, slot++);
    h = tape.affine(h, w, b);
    if (k + 1 < p.layers.size()) h = tape.activate(h, p.hidden_activation);
  }
  return h;
}

// coeff * sum of squared elements over the given weight variables.
inline Tape::Var l2_on_tape(Tape& tape, const std::vector<Tape::Var>& weights, double coeff) {
  Tape::Var total = tape.constant(RealMatrix::Zero(1, 1));
  for (auto w : weights) total = tape.add(total, tape.sum(tape.square(w)));
  return tape.scale(total, coeff);
}

}  // namespace selfplay
