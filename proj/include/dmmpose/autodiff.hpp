#pragma once

#include "dmmpose/params.hpp"
#include "dmmpose/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dmmpose {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of primitive operations. Nodes are stored in creation
// order, which is a topological order, so the reverse pass is a single
// backwards sweep. Parameter leaves are created on first use per ParamSet.
class Tape {
 public:
  // Called with the node's own id; reads value(self)/grad(self) and
  // accumulates into its inputs through grad_ref().
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(const ParamSet& set, ParamId id);

  // With gradients disabled, param() yields constants and no backward
  // closures are stored. Used for forecasting and evaluation.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  // Reverse sweep from a 1x1 loss. Clears gradients from any previous sweep,
  // so repeated calls on the same tape are identical.
  void backward(Var loss);

  // Gradients of the last backward() for every parameter of `set`; parameters
  // that never reached the loss get zeros.
  Gradients gradients(const ParamSet& set) const;

  Gradients backward(Var loss, const ParamSet& set) {
    backward(loss);
    return gradients(set);
  }

  std::size_t size() const { return nodes_.size(); }

  // Primitive construction interface used by the op library.
  Var record(Tensor value, bool requires_grad, BackwardFn fn);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  // Gradient accumulator for node `id`, zero-initialised on first access.
  Tensor& grad_ref(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  struct Binding {
    const ParamSet* set;
    std::vector<long> leaf;  // node id per parameter, -1 if unused
  };

  std::vector<Node> nodes_;
  std::vector<Binding> bindings_;
  bool grad_enabled_ = true;
};

// Shorthand bundling a tape with the parameter set a module reads from.
struct Graph {
  Tape& tape;
  const ParamSet& params;
  Var operator[](ParamId id) const { return tape.param(params, id); }
};

namespace ad {

Var matmul(Var a, Var b);
// Element-wise sum. `b` may be a single row broadcast over the rows of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var neg(Var a);
Var one_minus(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
Var square(Var a);
// max(a, lo); the gradient is zero where the bound is active.
Var clamp_min(Var a, double lo);
// min(max(a, lo), hi).
Var clamp(Var a, double lo, double hi);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
// Repeats a single-row value `rows` times.
Var broadcast_rows(Var a, Eigen::Index rows);

// Sum of all elements as a 1x1 value.
Var sum(Var a);
// Per-row sums as a (rows x 1) value.
Var row_sum(Var a);

// Diagonal Gaussian log-density of each row of x; (rows x 1).
Var gaussian_log_pdf_rows(Var x, Var mean, Var log_var);
// Closed-form KL(q || p) per row for diagonal Gaussians; (rows x 1).
Var gaussian_kl_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var);
// mean + exp(log_var / 2) * eps
Var reparam_sample(Var mean, Var log_var, const Tensor& eps);
// Negative log softmax probability of the labelled class per row; (rows x 1).
Var softmax_cross_entropy_rows(Var logits, std::span<const int> labels);

}  // namespace ad
}  // namespace dmmpose
