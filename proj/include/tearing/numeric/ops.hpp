#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tearing/numeric/tape.hpp"

// Differentiable operations over rank-2 (points x features) tensors. Rank-1
// operands are read as a single row wherever a row vector is expected.
namespace tearing::ops {

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b);

/// a (m x n) + bias (n) broadcast over rows.
template <typename T>
Var add_bias(Tape<T>& tape, Var a, Var bias);

/// x (m x p) * w (p x h) + b (h). Equivalent to matmul followed by add_bias.
template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b);

/// [x, 1 * code] * w + b where x is (m x p), code is one row of d values and w
/// is ((p + d) x h): concatenation with a row-broadcast codeword fused into
/// a linear layer, so the codeword product is computed once.
template <typename T>
Var code_linear(Tape<T>& tape, Var x, Var code, Var w, Var b);

template <typename T>
Var relu(Tape<T>& tape, Var a);

/// Concatenate along the last axis; both operands need equal row counts.
template <typename T>
Var concat_cols(Tape<T>& tape, Var a, Var b);

/// Repeat a single row `rows` times.
template <typename T>
Var repeat_rows(Tape<T>& tape, Var row, std::size_t rows);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b);

template <typename T>
Var scale(Tape<T>& tape, Var a, T factor);

/// Column-wise max over the point (row) axis. The gradient is routed to the
/// row recorded at forward time, first index on ties.
template <typename T>
Var max_rows(Tape<T>& tape, Var a);

template <typename T>
Var sum_all(Tape<T>& tape, Var a);

template <typename T>
Var mean_all(Tape<T>& tape, Var a);

/// Forward value and argmax of the column-wise max, without recording.
template <typename T>
std::pair<Tensor<T>, std::vector<std::size_t>> max_rows_value(const Tensor<T>& a);

}  // namespace tearing::ops
