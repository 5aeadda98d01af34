#include "tearing/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tearing {

namespace {
double evaluate(const ParameterStore<double>& params, const LossBuilder& loss) {
  Tape<double> tape;
  BoundParameters<double> bound(tape, params);
  return tape.value(loss(tape, bound)).item();
}
}  // namespace

GradCheckResult gradient_check(const ParameterStore<double>& params, const LossBuilder& loss,
                               const GradCheckOptions& options) {
  GradientSet<double> analytic;
  double loss0 = 0.0;
  {
    Tape<double> tape;
    BoundParameters<double> bound(tape, params);
    Var l = loss(tape, bound);
    loss0 = tape.value(l).item();
    tape.backward(l);
    analytic = bound.gradients(tape);
  }

  const double floor = options.floor * std::max(1.0, std::abs(loss0));
  GradCheckResult result;
  ParameterStore<double> probe = params;
  Rng rng(options.seed);
  for (std::size_t t = 0; t < probe.size(); ++t) {
    Tensor<double>& p = probe.at(t);
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_per_tensor != 0 && coords.size() > options.max_per_tensor) {
      rng.shuffle(coords);
      coords.resize(options.max_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t k : coords) {
      const double orig = p[k];
      p[k] = orig + options.step;
      const double up = evaluate(probe, loss);
      p[k] = orig - options.step;
      const double down = evaluate(probe, loss);
      p[k] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[t][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = std::abs(a - numeric) / denom;
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_parameter = probe.names()[t];
        result.worst_index = k;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace tearing
