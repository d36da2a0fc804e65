#include "sigmaridge/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sigmaridge {

namespace {

// Least squares on the passive columns; minimum-norm when those columns are
// rank deficient.
Vector passive_solve(const Matrix& a, const Vector& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < passive.size(); ++j) {
    if (passive[j]) cols.push_back(static_cast<Eigen::Index>(j));
  }
  Matrix sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  const Vector z_sub = Eigen::CompleteOrthogonalDecomposition<Matrix>(sub).solve(b);
  Vector z = Vector::Zero(a.cols());
  for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = z_sub(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsSolution solve_nnls(const Matrix& a, const Vector& b) {
  const Eigen::Index k = a.cols();
  if (k < 1) throw ValidationError("NNLS needs at least one column");
  if (a.rows() != b.size()) throw ValidationError("NNLS: A and b have mismatched rows");
  if (!a.allFinite() || !b.allFinite()) throw ValidationError("NNLS input has non-finite entries");

  NnlsSolution out;
  out.rank_deficient = Eigen::ColPivHouseholderQR<Matrix>(a).rank() < k;

  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = 10.0 * eps * std::max(a.norm() * b.norm(), std::numeric_limits<double>::min());
  const std::size_t max_cycles = 10 * static_cast<std::size_t>(k);

  Vector x = Vector::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  Vector w = a.transpose() * (b - a * x);

  std::size_t cycles = 0;
  while (true) {
    Eigen::Index enter = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    if (++cycles > max_cycles) {
      throw ConvergenceError("NNLS exceeded " + std::to_string(max_cycles) + " cycles", w.maxCoeff());
    }
    passive[static_cast<std::size_t>(enter)] = true;

    for (std::size_t inner = 0;; ++inner) {
      if (inner > static_cast<std::size_t>(k) + 1) {
        throw ConvergenceError("NNLS inner loop did not terminate", w.maxCoeff());
      }
      Vector z = passive_solve(a, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      // Step toward z until the first passive coordinate hits zero.
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= eps * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }

  out.d = x;
  out.residual_norm = (a * x - b).norm();
  out.iterations = cycles;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (x(j) > 0.0) out.active_set.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace sigmaridge
