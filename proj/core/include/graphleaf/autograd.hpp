#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "graphleaf/tensor.hpp"

namespace graphleaf {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape. Every op appends a node holding its value and, when
/// any input requires a gradient, a closure that pushes the node's gradient
/// back to its inputs. `backward()` replays the closures in reverse order.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Var constant(Tensor<T> value) { return push(std::move(value), false, {}); }
  Var parameter(Tensor<T> value) { return push(std::move(value), true, {}); }

  /// Records an op result. The closure is dropped when no input needs a
  /// gradient, so evaluation-only passes keep no backward state.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
  }

  const Tensor<T>& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient accumulated so far; zeros if nothing reached the node.
  const Tensor<T>& grad(Var v) {
    ensure_grad(nodes_[v.id]);
    return nodes_[v.id].grad;
  }

  /// Mutable gradient buffer for use inside backward closures.
  Tensor<T>& grad_buffer(Var v) {
    ensure_grad(nodes_[v.id]);
    return nodes_[v.id].grad;
  }

  /// Seeds d(root)/d(root) = 1 for a single-element root.
  void backward(Var root) {
    if (value(root).size() != 1) throw InputError("backward root must be a scalar");
    grad_buffer(root).fill(T{1});
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.backward || node.grad.empty()) continue;
      node.backward(*this, node.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor<T> value, bool requires_grad, Backward backward) {
    nodes_.push_back({std::move(value), {}, requires_grad, std::move(backward)});
    return Var{nodes_.size() - 1};
  }

  static void ensure_grad(Node& node) {
    if (node.grad.size() != node.value.size() || node.grad.shape() != node.value.shape())
      node.grad = Tensor<T>(node.value.shape());
  }

  std::vector<Node> nodes_;
};

}  // namespace graphleaf
