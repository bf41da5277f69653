#include "swinlite/autograd.hpp"

namespace swinlite {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return push(std::move(n));
}

Var Tape::watch(Tensor value, Tensor* sink) {
  Node n;
  n.value = std::move(value);
  n.sink = sink;
  n.op = "leaf";
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const Var& in : inputs) {
    if (in.tape != this) {
      throw std::logic_error(std::string(op) + ": input from another tape");
    }
    n.requires_grad = n.requires_grad || nodes_.at(in.id).requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor* Tape::grad_target(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return &n.grad;
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) {
    throw DimensionError("backward needs a scalar root, got shape " +
                         shape_str(root.value.shape()));
  }
  if (root.requires_grad) {
    root.grad = Tensor::ones(root.value.shape());
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, n.grad);
      n.grad = Tensor();
    }
  }
  for (Node& n : nodes_) {
    if (!n.sink) continue;
    if (n.sink->shape() != n.value.shape()) {
      *n.sink = Tensor::zeros(n.value.shape());
    }
    if (!n.grad.empty()) n.sink->add_(n.grad);
  }
  clear();
}

}  // namespace swinlite
