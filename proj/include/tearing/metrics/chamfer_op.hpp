#pragma once

#include "tearing/numeric/tape.hpp"

namespace tearing {

/// Augmented Chamfer distance between two (n x 3) and (m x 3) tape values:
/// max of the two directed mean nearest-neighbour distances. Gradients flow
/// to the argmin pairs of the larger term; an exact tie between the terms
/// routes through the `x_hat`-to-`x` term, and a zero distance contributes
/// a zero subgradient.
template <typename T>
Var chamfer_aug_op(Tape<T>& tape, Var x, Var x_hat);

}  // namespace tearing
