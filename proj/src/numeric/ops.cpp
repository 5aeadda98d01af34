#include "tearing/numeric/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>

namespace tearing::ops {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const Mat<T>>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using RowMapC = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using RowMapM = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <typename T>
MapC<T> view(const Tensor<T>& t) {
  return MapC<T>(t.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
MapM<T> view(Tensor<T>& t) {
  return MapM<T>(t.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

template <typename T>
void require_matrix(const char* op, const Tensor<T>& t) {
  if (t.rank() > 2) throw ShapeError(std::string(op) + ": expected rank <= 2, got " + shape_str(t.shape()));
}

template <typename T>
bool is_row(const Tensor<T>& t, std::size_t n) {
  return (t.rank() == 1 && t.shape()[0] == n) || (t.rank() == 2 && t.shape()[0] == 1 && t.shape()[1] == n);
}

}  // namespace

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  require_matrix("matmul", A);
  require_matrix("matmul", B);
  if (A.cols() != B.rows()) mismatch("matmul", A.shape(), B.shape());
  Tensor<T> out(Shape{A.rows(), B.cols()});
  view(out).noalias() = view(A) * view(B);
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const auto G = view(t.grad(self));
    if (t.needs_grad(a)) view(t.grad_accumulator(a.id)).noalias() += G * view(t.value(b)).transpose();
    if (t.needs_grad(b)) view(t.grad_accumulator(b.id)).noalias() += view(t.value(a)).transpose() * G;
  });
}

template <typename T>
Var add_bias(Tape<T>& tape, Var a, Var bias) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(bias);
  require_matrix("add_bias", A);
  if (!is_row(B, A.cols())) mismatch("add_bias", A.shape(), B.shape());
  Tensor<T> out = A;
  auto O = view(out);
  O.rowwise() += RowMapC<T>(B.data(), B.size());
  return tape.record(std::move(out), {a, bias}, [a, bias](Tape<T>& t, std::size_t self) {
    const auto G = view(t.grad(self));
    if (t.needs_grad(a)) view(t.grad_accumulator(a.id)) += G;
    if (t.needs_grad(bias)) {
      Tensor<T>& gb = t.grad_accumulator(bias.id);
      RowMapM<T>(gb.data(), gb.size()) += G.colwise().sum();
    }
  });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b) {
  const Tensor<T>& X = tape.value(x);
  const Tensor<T>& W = tape.value(w);
  const Tensor<T>& B = tape.value(b);
  require_matrix("linear", X);
  require_matrix("linear", W);
  if (X.cols() != W.rows()) mismatch("linear", X.shape(), W.shape());
  if (!is_row(B, W.cols())) mismatch("linear(bias)", W.shape(), B.shape());
  Tensor<T> out(Shape{X.rows(), W.cols()});
  auto O = view(out);
  O.noalias() = view(X) * view(W);
  O.rowwise() += RowMapC<T>(B.data(), B.size());
  return tape.record(std::move(out), {x, w, b}, [x, w, b](Tape<T>& t, std::size_t self) {
    const auto G = view(t.grad(self));
    if (t.needs_grad(x)) view(t.grad_accumulator(x.id)).noalias() += G * view(t.value(w)).transpose();
    if (t.needs_grad(w)) view(t.grad_accumulator(w.id)).noalias() += view(t.value(x)).transpose() * G;
    if (t.needs_grad(b)) {
      Tensor<T>& gb = t.grad_accumulator(b.id);
      RowMapM<T>(gb.data(), gb.size()) += G.colwise().sum();
    }
  });
}

template <typename T>
Var code_linear(Tape<T>& tape, Var x, Var code, Var w, Var b) {
  const Tensor<T>& X = tape.value(x);
  const Tensor<T>& C = tape.value(code);
  const Tensor<T>& W = tape.value(w);
  const Tensor<T>& B = tape.value(b);
  require_matrix("code_linear", X);
  require_matrix("code_linear", W);
  const std::size_t p = X.cols();
  const std::size_t d = C.size();
  if (!is_row(C, d) || W.rows() != p + d) {
    throw ShapeError("code_linear: point features " + shape_str(X.shape()) + " and codeword " +
                     shape_str(C.shape()) + " do not match weight " + shape_str(W.shape()));
  }
  if (!is_row(B, W.cols())) mismatch("code_linear(bias)", W.shape(), B.shape());
  const auto h = static_cast<Eigen::Index>(W.cols());
  const auto P = static_cast<Eigen::Index>(p);
  const auto Wv = view(W);

  Eigen::Matrix<T, 1, Eigen::Dynamic> shift = RowMapC<T>(B.data(), h);
  shift.noalias() += RowMapC<T>(C.data(), static_cast<Eigen::Index>(d)) * Wv.bottomRows(static_cast<Eigen::Index>(d));
  Tensor<T> out(Shape{X.rows(), W.cols()});
  auto O = view(out);
  O.noalias() = view(X) * Wv.topRows(P);
  O.rowwise() += shift;

  return tape.record(std::move(out), {x, code, w, b}, [x, code, w, b, p, d](Tape<T>& t, std::size_t self) {
    const auto G = view(t.grad(self));
    const auto Wv = view(t.value(w));
    const auto P = static_cast<Eigen::Index>(p);
    const auto D = static_cast<Eigen::Index>(d);
    const Eigen::Matrix<T, 1, Eigen::Dynamic> gsum = G.colwise().sum();
    if (t.needs_grad(x)) view(t.grad_accumulator(x.id)).noalias() += G * Wv.topRows(P).transpose();
    if (t.needs_grad(w)) {
      auto GW = view(t.grad_accumulator(w.id));
      GW.topRows(P).noalias() += view(t.value(x)).transpose() * G;
      const Tensor<T>& C = t.value(code);
      GW.bottomRows(D).noalias() += RowMapC<T>(C.data(), D).transpose() * gsum;
    }
    if (t.needs_grad(code)) {
      Tensor<T>& gc = t.grad_accumulator(code.id);
      RowMapM<T>(gc.data(), D).noalias() += gsum * Wv.bottomRows(D).transpose();
    }
    if (t.needs_grad(b)) {
      Tensor<T>& gb = t.grad_accumulator(b.id);
      RowMapM<T>(gb.data(), gb.size()) += gsum;
    }
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var a) {
  Tensor<T> out = tape.value(a);
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  return tape.record(std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    const Tensor<T>& A = t.value(a);
    Tensor<T>& GA = t.grad_accumulator(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) {
      if (A[i] > T(0)) GA[i] += G[i];
    }
  });
}

template <typename T>
Var concat_cols(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  require_matrix("concat_cols", A);
  require_matrix("concat_cols", B);
  if (A.rows() != B.rows()) mismatch("concat_cols", A.shape(), B.shape());
  const std::size_t ca = A.cols();
  const std::size_t cb = B.cols();
  Tensor<T> out(Shape{A.rows(), ca + cb});
  auto O = view(out);
  O.leftCols(static_cast<Eigen::Index>(ca)) = view(A);
  O.rightCols(static_cast<Eigen::Index>(cb)) = view(B);
  return tape.record(std::move(out), {a, b}, [a, b, ca, cb](Tape<T>& t, std::size_t self) {
    const auto G = view(t.grad(self));
    if (t.needs_grad(a)) view(t.grad_accumulator(a.id)) += G.leftCols(static_cast<Eigen::Index>(ca));
    if (t.needs_grad(b)) view(t.grad_accumulator(b.id)) += G.rightCols(static_cast<Eigen::Index>(cb));
  });
}

template <typename T>
Var repeat_rows(Tape<T>& tape, Var row, std::size_t rows) {
  const Tensor<T>& R = tape.value(row);
  if (!is_row(R, R.size())) throw ShapeError("repeat_rows: expected a single row, got " + shape_str(R.shape()));
  const std::size_t n = R.size();
  Tensor<T> out(Shape{rows, n});
  view(out).rowwise() = RowMapC<T>(R.data(), static_cast<Eigen::Index>(n));
  return tape.record(std::move(out), {row}, [row, n](Tape<T>& t, std::size_t self) {
    Tensor<T>& gr = t.grad_accumulator(row.id);
    RowMapM<T>(gr.data(), static_cast<Eigen::Index>(n)) += view(t.grad(self)).colwise().sum();
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.shape() != B.shape()) mismatch("add", A.shape(), B.shape());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    for (Var p : {a, b}) {
      if (!t.needs_grad(p)) continue;
      Tensor<T>& gp = t.grad_accumulator(p.id);
      for (std::size_t i = 0; i < G.size(); ++i) gp[i] += G[i];
    }
  });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.shape() != B.shape()) mismatch("sub", A.shape(), B.shape());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    if (t.needs_grad(a)) {
      Tensor<T>& ga = t.grad_accumulator(a.id);
      for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i];
    }
    if (t.needs_grad(b)) {
      Tensor<T>& gb = t.grad_accumulator(b.id);
      for (std::size_t i = 0; i < G.size(); ++i) gb[i] -= G[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T factor) {
  Tensor<T> out = tape.value(a);
  for (auto& v : out.values()) v *= factor;
  return tape.record(std::move(out), {a}, [a, factor](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    Tensor<T>& ga = t.grad_accumulator(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) ga[i] += factor * G[i];
  });
}

template <typename T>
std::pair<Tensor<T>, std::vector<std::size_t>> max_rows_value(const Tensor<T>& a) {
  require_matrix("max_rows", a);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0) throw ShapeError("max_rows: no rows to reduce in " + shape_str(a.shape()));
  Tensor<T> out(Shape{1, n});
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t c = 0; c < n; ++c) out[c] = a[c];
  for (std::size_t r = 1; r < m; ++r) {
    const T* row = a.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) {
      if (row[c] > out[c]) {
        out[c] = row[c];
        arg[c] = r;
      }
    }
  }
  return {std::move(out), std::move(arg)};
}

template <typename T>
Var max_rows(Tape<T>& tape, Var a) {
  auto [out, arg] = max_rows_value(tape.value(a));
  return tape.record(std::move(out), {a}, [a, arg = std::move(arg)](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    Tensor<T>& ga = t.grad_accumulator(a.id);
    const std::size_t n = arg.size();
    for (std::size_t c = 0; c < n; ++c) ga[arg[c] * n + c] += G[c];
  });
}

template <typename T>
Var sum_all(Tape<T>& tape, Var a) {
  T s = T(0);
  for (auto v : tape.value(a).values()) s += v;
  return tape.record(Tensor<T>::scalar(s), {a}, [a](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    for (auto& v : t.grad_accumulator(a.id).values()) v += g;
  });
}

template <typename T>
Var mean_all(Tape<T>& tape, Var a) {
  const Tensor<T>& A = tape.value(a);
  if (A.empty()) throw ShapeError("mean_all: empty tensor " + shape_str(A.shape()));
  T s = T(0);
  for (auto v : A.values()) s += v;
  const T inv = T(1) / static_cast<T>(A.size());
  return tape.record(Tensor<T>::scalar(s * inv), {a}, [a, inv](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0] * inv;
    for (auto& v : t.grad_accumulator(a.id).values()) v += g;
  });
}

#define TEARING_INSTANTIATE_OPS(T)                                                  \
  template Var matmul<T>(Tape<T>&, Var, Var);                                       \
  template Var add_bias<T>(Tape<T>&, Var, Var);                                     \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                                  \
  template Var code_linear<T>(Tape<T>&, Var, Var, Var, Var);                        \
  template Var relu<T>(Tape<T>&, Var);                                              \
  template Var concat_cols<T>(Tape<T>&, Var, Var);                                  \
  template Var repeat_rows<T>(Tape<T>&, Var, std::size_t);                          \
  template Var add<T>(Tape<T>&, Var, Var);                                          \
  template Var sub<T>(Tape<T>&, Var, Var);                                          \
  template Var scale<T>(Tape<T>&, Var, T);                                          \
  template Var max_rows<T>(Tape<T>&, Var);                                          \
  template Var sum_all<T>(Tape<T>&, Var);                                           \
  template Var mean_all<T>(Tape<T>&, Var);                                          \
  template std::pair<Tensor<T>, std::vector<std::size_t>> max_rows_value<T>(const Tensor<T>&);

TEARING_INSTANTIATE_OPS(float)
TEARING_INSTANTIATE_OPS(double)

}  // namespace tearing::ops
