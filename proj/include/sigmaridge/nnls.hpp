#pragma once

#include <vector>

#include "sigmaridge/core.hpp"

namespace sigmaridge {

struct NnlsSolution {
  Vector d;
  double residual_norm = 0.0;
  /// Indices with d_g > 0, ascending.
  std::vector<std::size_t> active_set;
  /// A has rank < K; d is then the minimum-norm point of each subproblem.
  bool rank_deficient = false;
  std::size_t iterations = 0;
};

/// argmin_{d >= 0} ||A d - b||_2 by the Lawson-Hanson active-set method.
///
/// Throws ValidationError on non-finite input and ConvergenceError if the
/// outer loop exceeds 10 K cycles.
NnlsSolution solve_nnls(const Matrix& a, const Vector& b);

}  // namespace sigmaridge
