#include "cgnp/numkit/tape.hpp"

#include <algorithm>

#include "cgnp/numkit/errors.hpp"

namespace cgnp {

Var Tape::constant(Matrix value) {
  if (!value.all_finite()) throw NonFiniteError("constant contains NaN/Inf");
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamLeaf& leaf) {
  if (!leaf.grad.same_shape(leaf.value)) leaf.grad = Matrix(leaf.value.rows(), leaf.value.cols());
  nodes_.push_back(Node{leaf.value, {}, {}, &leaf, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn, const char* op) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn), op);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn, const char* op) {
  if (!value.all_finite()) throw NonFiniteError(std::string(op) + " produced NaN/Inf");
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [this](Var v) {
    return v.valid() && nodes_[v.id()].requires_grad;
  });
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  if (!v.valid() || !nodes_[v.id()].requires_grad) return;
  Matrix& buf = grad_buffer(v);
  if (!buf.same_shape(g)) throw DimensionError("gradient shape does not match node value");
  add_inplace(buf, g);
}

void Tape::backward(Var loss) {
  if (consumed_) throw UsageError("backward called twice on the same tape");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw UsageError("backward requires a scalar loss, got " + std::to_string(lv.rows()) + "x" +
                     std::to_string(lv.cols()));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss)(0, 0) = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.leaf != nullptr) {
      add_inplace(n.leaf->grad, n.grad);
    } else if (n.backward) {
      // The callback may append to other nodes' grads but never reallocates
      // nodes_, so the reference stays valid.
      n.backward(*this, n.grad);
    }
  }
}

}  // namespace cgnp
