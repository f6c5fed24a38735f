#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>

#include "vrdie/nn/tensor.hpp"

namespace vrdie::nn {

// A named trainable tensor. `grad` is a gradient sink written by Tape::backward
// even through const access, so forward code can take parameters by const&.
struct Parameter {
  std::string name;
  Tensor value;
  mutable Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() const {
    if (!grad.same_shape(value)) grad = Tensor(value.rows(), value.cols());
    else grad.fill(0.0);
  }
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  inline const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records one forward pass. Nodes are appended in creation order, so reverse
// creation order is a valid topological order for backward.
class Tape {
 public:
  using Backward = std::function<void(const Tensor& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor v) {
    Node& n = nodes_.emplace_back();
    n.owned = std::move(v);
    n.value = &n.owned;
    return Var(this, nodes_.size() - 1);
  }

  // Wraps an externally owned tensor without copying it.
  Var constant_ref(const Tensor& v) {
    Node& n = nodes_.emplace_back();
    n.value = &v;
    return Var(this, nodes_.size() - 1);
  }

  Var param(const Parameter& p) {
    Node& n = nodes_.emplace_back();
    n.value = &p.value;
    if (grad_enabled_) {
      if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.rows(), p.value.cols());
      n.grad_sink = &p.grad;
      n.requires_grad = true;
    }
    return Var(this, nodes_.size() - 1);
  }

  Var record(Tensor value, std::initializer_list<Var> parents, Backward back) {
    bool rg = false;
    if (grad_enabled_) {
      for (const Var& p : parents) {
        check_owned(p);
        rg = rg || nodes_[p.id()].requires_grad;
      }
    }
    Node& n = nodes_.emplace_back();
    n.owned = std::move(value);
    n.value = &n.owned;
    n.requires_grad = rg;
    if (rg) n.back = std::move(back);
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& value(const Var& v) const { return *nodes_[v.id()].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of a node, allocated (zeroed) on first use.
  Tensor& grad(const Var& v) {
    Node& n = nodes_[v.id()];
    if (n.grad_sink) return *n.grad_sink;
    if (n.owned_grad.empty() && !n.value->empty()) n.owned_grad = Tensor(n.value->rows(), n.value->cols());
    n.touched = true;
    return n.owned_grad;
  }

  void backward(const Var& root) {
    check_owned(root);
    const Tensor& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("backward: root must be [1,1], got " + rv.shape_str());
    if (!nodes_[root.id()].requires_grad) return;
    grad(root)[0] += 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.back || !n.touched) continue;
      n.back(n.owned_grad);
    }
  }

 private:
  struct Node {
    Tensor owned;
    const Tensor* value = nullptr;
    Tensor owned_grad;
    Tensor* grad_sink = nullptr;
    bool requires_grad = false;
    bool touched = false;
    Backward back;
  };

  void check_owned(const Var& v) const {
    if (v.tape() != this) throw std::logic_error("Var does not belong to this tape");
  }

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace vrdie::nn
