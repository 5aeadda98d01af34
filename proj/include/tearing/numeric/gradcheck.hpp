#pragma once

#include <functional>
#include <string>

#include "tearing/numeric/params.hpp"

namespace tearing {

struct GradCheckOptions {
  double step = 1e-6;
  /// err_i = |a_i - n_i| / max(|a_i|, |n_i|, floor * max(1, |loss|)).
  /// The floor keeps round-off in the difference quotient, which grows
  /// with the loss value, from counting against near-zero gradients.
  double floor = 1e-5;
  /// Probe at most this many coordinates per tensor (0 = all), chosen
  /// with a seeded generator.
  std::size_t max_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Builds the scalar loss on a fresh tape from bound parameters.
using LossBuilder = std::function<Var(Tape<double>&, const BoundParameters<double>&)>;

/// Compare reverse-mode gradients with central differences in f64.
GradCheckResult gradient_check(const ParameterStore<double>& params, const LossBuilder& loss,
                               const GradCheckOptions& options = {});

}  // namespace tearing
