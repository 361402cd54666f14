#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elue/ndiff/parameters.hpp"
#include "elue/ndiff/tensor.hpp"

namespace elue::ndiff {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation tape. One tape is built per loss evaluation
/// and discarded afterwards; nodes are stored in creation order, which is a
/// valid topological order for the backward sweep.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& output_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter entry. Repeated calls for the same entry
  /// return the same node so gradients accumulate in one place.
  Var parameter(const ParameterSet& set, std::string_view name);

  /// Records an op output. `backward` runs only if some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, zero-initialized on first access.
  Tensor& grad(std::size_t id);

  /// Runs the backward sweep from a single-element loss. May be called once.
  void backward(Var loss);

  /// d loss / d p for every entry of `set`; entries absent from the tape get zeros.
  Gradients gradients(const ParameterSet& set) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  std::vector<Node> nodes_;
  std::map<std::pair<const ParameterSet*, std::string>, std::size_t, std::less<>> params_;
  bool swept_ = false;
};

/// Convenience: gradients of `loss` for one parameter set.
Gradients grad(Var loss, const ParameterSet& params);

// Differentiable ops. Tensors are treated as matrices (rows = batch).
Var matmul(Var a, Var b);
/// x W + 1 b, with x: n x in, W: in x out, b: 1 x out.
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var softplus(Var a);
Var square(Var a);
/// Elementwise clamp; gradient passes where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);
/// Sum of all elements, shape 1 x 1.
Var sum(Var a);
Var mean(Var a);
/// Column sums, n x m -> 1 x m.
Var sum_rows(Var a);
/// Row sums, n x m -> n x 1.
Var sum_cols(Var a);
/// 1 x m -> n x m.
Var broadcast_rows(Var a, std::size_t n);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Sums consecutive row groups: group g covers `lengths[g]` rows. Output has one row per group.
Var segment_sum_rows(Var a, const std::vector<std::size_t>& lengths);
/// Repeats row g of `a` lengths[g] times, stacking the copies in order.
Var repeat_rows(Var a, const std::vector<std::size_t>& lengths);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace elue::ndiff
