#include "tearing/numeric/adam.hpp"

#include <cmath>

namespace tearing {

template <typename T>
AdamState<T> AdamState<T>::zeros(const ParameterStore<T>& params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.first_moment.emplace_back(params.at(i).shape());
    s.second_moment.emplace_back(params.at(i).shape());
  }
  return s;
}

template <typename T>
void adam_step(ParameterStore<T>& params, const GradientSet<T>& grads, AdamState<T>& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) + " parameters, " +
                                std::to_string(grads.size()) + " gradients, " +
                                std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& ps = params.at(i).shape();
    if (grads[i].shape() != ps || state.first_moment[i].shape() != ps ||
        state.second_moment[i].shape() != ps) {
      throw ShapeError("adam_step: parameter '" + params.names()[i] + "' has shape " + shape_str(ps) +
                       " but gradient has " + shape_str(grads[i].shape()));
    }
    if (!grads[i].all_finite()) throw NonFiniteGradient(params.names()[i]);
  }

  state.step += 1;
  const auto& o = state.options;
  const T b1 = static_cast<T>(o.beta1);
  const T b2 = static_cast<T>(o.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(o.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(o.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(o.learning_rate);
  const T eps = static_cast<T>(o.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params.at(i);
    Tensor<T>& m = state.first_moment[i];
    Tensor<T>& v = state.second_moment[i];
    const Tensor<T>& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const T mhat = m[k] / c1;
      const T vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(ParameterStore<float>&, const GradientSet<float>&, AdamState<float>&);
template void adam_step<double>(ParameterStore<double>&, const GradientSet<double>&, AdamState<double>&);

}  // namespace tearing
