#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>
#include <string>

#include "swinlite/tensor.hpp"

namespace swinlite {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the
/// owning tape is cleared.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

/// A named trainable tensor together with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor::zeros(value.shape()); }
};

/// Records primitive operations for reverse-mode differentiation.
///
/// Node ids are assigned in creation order, and every op's inputs are created
/// before it, so descending id order is a reverse topological order. A tape
/// has a single owner; use one tape per forward/backward step.
class Tape {
 public:
  /// Called during backward with the gradient of the node's output. The
  /// closure accumulates into its inputs via grad_target().
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is added into *sink when backward() runs. The sink
  /// is reset to zeros of the right shape if its shape does not match.
  Var watch(Tensor value, Tensor* sink);
  Var parameter(Parameter& p) { return watch(p.value, &p.grad); }

  /// Records an op output. When no input requires a gradient the closure is
  /// dropped and the result behaves like a constant. Throws NumericError if
  /// the value holds NaN or Inf.
  Var record(const char* op, Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward);

  /// The handle the next recorded node will receive. Lets a backward
  /// closure refer to its own output.
  Var upcoming() { return Var{this, static_cast<std::uint32_t>(nodes_.size())}; }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Mutable zero-initialized gradient buffer for v, or nullptr if v does not
  /// require a gradient.
  Tensor* grad_target(Var v);

  /// Back-propagates from a scalar root, deposits leaf gradients into their
  /// sinks, then clears the tape.
  void backward(Var loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Tensor* sink = nullptr;
    const char* op = "";
    bool requires_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
};

}  // namespace swinlite
