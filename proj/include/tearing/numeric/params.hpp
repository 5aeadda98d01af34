#pragma once

#include <map>
#include <string>
#include <vector>

#include "tearing/numeric/rng.hpp"
#include "tearing/numeric/tape.hpp"

namespace tearing {

/// Named parameter tensors in a fixed insertion order.
template <typename T>
class ParameterStore {
 public:
  void add(const std::string& name, Tensor<T> value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t scalar_count() const;
  Tensor<T>& at(std::size_t i) { return values_[i]; }
  const Tensor<T>& at(std::size_t i) const { return values_[i]; }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], values_[i].template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> values_;
  std::map<std::string, std::size_t> index_;
};

/// Gradients keyed like a ParameterStore, same order.
template <typename T>
using GradientSet = std::vector<Tensor<T>>;

/// Parameters placed on a tape as variables for one forward pass.
template <typename T>
class BoundParameters {
 public:
  BoundParameters(Tape<T>& tape, const ParameterStore<T>& store);
  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return store_->contains(name); }
  /// Gradients after tape.backward(), in store order.
  GradientSet<T> gradients(const Tape<T>& tape) const;

 private:
  const ParameterStore<T>* store_;
  std::vector<Var> vars_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

template <typename T>
void accumulate(GradientSet<T>& into, const GradientSet<T>& add);

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template class BoundParameters<float>;
extern template class BoundParameters<double>;

}  // namespace tearing
