#include "sigmaridge/linalg.hpp"

#include <lapacke.h>

namespace sigmaridge::linalg {

SymmetricEigen symmetric_eigen(Matrix a) {
  if (a.rows() != a.cols()) throw ValidationError("symmetric_eigen needs a square matrix");
  const auto n = static_cast<lapack_int>(a.rows());
  SymmetricEigen out;
  out.values.resize(a.rows());
  if (n == 0) return out;
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, out.values.data());
  if (info != 0) {
    throw NumericError("symmetric eigendecomposition failed (dsyevd info " + std::to_string(info) + ")");
  }
  out.vectors = std::move(a);
  return out;
}

Matrix gram_columns(const Matrix& a, double scale) {
  Matrix g = Matrix::Zero(a.cols(), a.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), 1.0 / scale);
  return g.selfadjointView<Eigen::Lower>();
}

Matrix gram_rows(const Matrix& a, double scale) {
  Matrix g = Matrix::Zero(a.rows(), a.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0 / scale);
  return g.selfadjointView<Eigen::Lower>();
}

Matrix select_columns(const Matrix& x, const std::vector<Eigen::Index>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(cols[k]);
  return out;
}

}  // namespace sigmaridge::linalg
