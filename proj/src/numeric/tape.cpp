#include "tearing/numeric/tape.hpp"

namespace tearing {

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::variable(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id).needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.shape() != n.value.shape()) {
    throw std::logic_error("gradient requested for node " + std::to_string(v.id) +
                           " that does not participate in the loss");
  }
  return n.grad;
}

template <typename T>
Tensor<T>& Tape<T>::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) {
    n.grad = Tensor<T>(n.value.shape());
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (nodes_.at(loss.id).value.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_str(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) {
    if (n.needs_grad) {
      if (n.grad.size() != n.value.size()) {
        n.grad = Tensor<T>(n.value.shape());
      } else {
        n.grad.fill(T(0));
      }
    }
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad.fill(T(1));
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.needs_grad && n.backward) n.backward(*this, id);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace tearing
