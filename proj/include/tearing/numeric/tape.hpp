#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "tearing/numeric/tensor.hpp"

namespace tearing {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode recording. Nodes are appended in evaluation order, so
/// reverse insertion order is a valid reverse traversal.
template <typename T>
class Tape {
 public:
  /// Propagates the node's gradient into its parents' accumulators.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor<T> value);
  Var variable(Tensor<T> value);

  /// Record the result of an operation. `backward` runs only when at least
  /// one parent needs a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn backward);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }

  /// Gradient from the latest backward pass. Zero for nodes the loss does
  /// not depend on.
  const Tensor<T>& grad(Var v) const;

  /// Accumulator of a node during backward; allocated on first use.
  Tensor<T>& grad_accumulator(std::size_t id);
  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor<T>& grad(std::size_t id) const { return nodes_[id].grad; }

  /// Zero every accumulator, seed d(loss)/d(loss) = 1 and sweep backwards.
  /// Throws ShapeError for a non-scalar loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace tearing
