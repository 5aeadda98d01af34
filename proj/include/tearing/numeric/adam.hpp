#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "tearing/numeric/params.hpp"

namespace tearing {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Thrown when a gradient holds NaN or infinity; no parameter is modified.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& parameter)
      : std::runtime_error("non-finite gradient for parameter '" + parameter + "'"),
        parameter_(parameter) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  AdamOptions options;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;

  /// Zero moments shaped like `params`.
  static AdamState zeros(const ParameterStore<T>& params, AdamOptions options);
};

/// One bias-corrected Adam update of every parameter.
template <typename T>
void adam_step(ParameterStore<T>& params, const GradientSet<T>& grads, AdamState<T>& state);

}  // namespace tearing
