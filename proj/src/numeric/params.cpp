#include "tearing/numeric/params.hpp"

#include <cmath>

namespace tearing {

template <typename T>
void ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_[name] = names_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
}

template <typename T>
std::size_t ParameterStore<T>::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& ParameterStore<T>::get(const std::string& name) {
  return values_[index_of(name)];
}

template <typename T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  return values_[index_of(name)];
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

template <typename T>
BoundParameters<T>::BoundParameters(Tape<T>& tape, const ParameterStore<T>& store) : store_(&store) {
  vars_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) vars_.push_back(tape.variable(store.at(i)));
}

template <typename T>
Var BoundParameters<T>::operator[](const std::string& name) const {
  return vars_[store_->index_of(name)];
}

template <typename T>
GradientSet<T> BoundParameters<T>::gradients(const Tape<T>& tape) const {
  GradientSet<T> out;
  out.reserve(vars_.size());
  for (Var v : vars_) out.push_back(tape.grad(v));
  return out;
}

template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> w(Shape{fan_in, fan_out});
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  return w;
}

template <typename T>
void accumulate(GradientSet<T>& into, const GradientSet<T>& add) {
  if (into.empty()) {
    into = add;
    return;
  }
  if (into.size() != add.size()) throw std::invalid_argument("gradient sets differ in length");
  for (std::size_t i = 0; i < into.size(); ++i) {
    if (into[i].shape() != add[i].shape()) {
      throw ShapeError("gradient shapes differ: " + shape_str(into[i].shape()) + " vs " +
                       shape_str(add[i].shape()));
    }
    for (std::size_t k = 0; k < add[i].size(); ++k) into[i][k] += add[i][k];
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class BoundParameters<float>;
template class BoundParameters<double>;
template Tensor<float> glorot_uniform<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> glorot_uniform<double>(std::size_t, std::size_t, Rng&);
template void accumulate<float>(GradientSet<float>&, const GradientSet<float>&);
template void accumulate<double>(GradientSet<double>&, const GradientSet<double>&);

}  // namespace tearing
