#pragma once

#include "tearing/geometry/types.hpp"
#include "tearing/numeric/tape.hpp"

namespace tearing {

/// Differentiable graph filter Y = (I - lambda L) X, where L is the Laplacian
/// of the torn graph: candidate edges re-weighted by the truncated kernel on
/// `positions` (m x q). Gradients reach X and, through the edge weights,
/// the positions. The surviving edges are written to `torn` when given.
template <typename T>
Var graph_filter_op(Tape<T>& tape, Var x, Var positions, const SparseGraph& candidates,
                    const GraphConfig& cfg, double lambda, SparseGraph* torn = nullptr);

/// Only the torn graph, without recording anything.
template <typename T>
SparseGraph torn_graph_of(const Tensor<T>& positions, const SparseGraph& candidates, const GraphConfig& cfg);

}  // namespace tearing
