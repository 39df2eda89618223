#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cgnp/numkit/matrix.hpp"

namespace cgnp {

/// A trainable tensor: value plus accumulated gradient of the same shape.
struct ParamLeaf {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamLeaf() = default;
  ParamLeaf(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order, so a
/// reverse sweep over ids is a valid topological order.
///
/// A tape is single-use: build the expression, call backward() once, discard.
/// Leaves created with param() must outlive the tape.
class Tape {
 public:
  /// Receives the node's output gradient; accumulates into inputs via
  /// accumulate().
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(ParamLeaf& leaf);

  /// Records an operation result. `inputs` decides whether the node
  /// participates in the backward sweep; `fn` may be empty for constants.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn, const char* op);
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn, const char* op);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Adds `g` to the gradient buffer of `v` (no-op when v needs no grad).
  void accumulate(Var v, const Matrix& g);
  /// Mutable gradient buffer of `v`, allocated on first access.
  Matrix& grad_buffer(Var v);

  /// Seeds d(loss)/d(loss) = 1 and sweeps back, adding into every reachable
  /// ParamLeaf::grad.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    ParamLeaf* leaf = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

}  // namespace cgnp
