#pragma once

#include "sigmaridge/core.hpp"

namespace sigmaridge::linalg {

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns are eigenvectors
};

/// Eigendecomposition of a symmetric matrix (lower triangle is read).
SymmetricEigen symmetric_eigen(Matrix a);

/// a^T a / scale, computed as a symmetric rank update.
Matrix gram_columns(const Matrix& a, double scale);
/// a a^T / scale.
Matrix gram_rows(const Matrix& a, double scale);

/// Columns of `x` listed in `cols`.
Matrix select_columns(const Matrix& x, const std::vector<Eigen::Index>& cols);

}  // namespace sigmaridge::linalg
