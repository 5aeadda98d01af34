#include "tearing/metrics/chamfer_op.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tearing/metrics/metrics.hpp"

namespace tearing {

template <typename T>
Var chamfer_aug_op(Tape<T>& tape, Var x, Var x_hat) {
  const Tensor<T>& A = tape.value(x);
  const Tensor<T>& B = tape.value(x_hat);
  for (const Tensor<T>* t : {&A, &B}) {
    if (t->rank() != 2 || t->cols() != 3) throw ShapeError("chamfer: expected (n, 3), got " + shape_str(t->shape()));
    if (t->rows() == 0) throw MetricError("Chamfer distance of an empty cloud");
  }
  const std::size_t n = A.rows(), m = B.rows();
  const T inf = std::numeric_limits<T>::infinity();
  std::vector<T> row_d2(n, inf), col_d2(m, inf);
  std::vector<std::uint32_t> row_arg(n, 0), col_arg(m, 0);
  const T* a = A.data();
  const T* b = B.data();
  for (std::size_t i = 0; i < n; ++i) {
    const T ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
    T best = inf;
    std::uint32_t arg = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const T dx = ax - b[3 * j], dy = ay - b[3 * j + 1], dz = az - b[3 * j + 2];
      const T d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) {
        best = d2;
        arg = static_cast<std::uint32_t>(j);
      }
      if (d2 < col_d2[j]) {
        col_d2[j] = d2;
        col_arg[j] = static_cast<std::uint32_t>(i);
      }
    }
    row_d2[i] = best;
    row_arg[i] = arg;
  }
  T forward = 0, backward = 0;
  for (std::size_t i = 0; i < n; ++i) forward += std::sqrt(row_d2[i]);
  for (std::size_t j = 0; j < m; ++j) backward += std::sqrt(col_d2[j]);
  forward /= static_cast<T>(n);
  backward /= static_cast<T>(m);
  // backward is the reconstruction-to-input term and wins ties.
  const bool from_hat = backward >= forward;
  Tensor<T> out = Tensor<T>::scalar(from_hat ? backward : forward);
  std::vector<std::uint32_t> arg = from_hat ? std::move(col_arg) : std::move(row_arg);

  return tape.record(std::move(out), {x, x_hat},
                     [x, x_hat, from_hat, arg = std::move(arg)](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self).item();
    const Var from = from_hat ? x_hat : x;
    const Var to = from_hat ? x : x_hat;
    const Tensor<T>& P = t.value(from);
    const Tensor<T>& Q = t.value(to);
    Tensor<T>* gp = t.needs_grad(from) ? &t.grad_accumulator(from.id) : nullptr;
    Tensor<T>* gq = t.needs_grad(to) ? &t.grad_accumulator(to.id) : nullptr;
    const T scale = g / static_cast<T>(P.rows());
    for (std::size_t i = 0; i < P.rows(); ++i) {
      const std::size_t j = arg[i];
      T diff[3];
      T d2 = 0;
      for (int k = 0; k < 3; ++k) {
        diff[k] = P[3 * i + k] - Q[3 * j + k];
        d2 += diff[k] * diff[k];
      }
      if (d2 == T(0)) continue;
      const T c = scale / std::sqrt(d2);
      for (int k = 0; k < 3; ++k) {
        if (gp) (*gp)[3 * i + k] += c * diff[k];
        if (gq) (*gq)[3 * j + k] -= c * diff[k];
      }
    }
  });
}

template Var chamfer_aug_op<float>(Tape<float>&, Var, Var);
template Var chamfer_aug_op<double>(Tape<double>&, Var, Var);

}  // namespace tearing
