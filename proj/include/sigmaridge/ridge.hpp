#pragma once

#include <cstdint>
#include <vector>

#include "sigmaridge/core.hpp"

namespace sigmaridge {

/// Which factorization solves the ridge system.
enum class SolverPath {
  automatic,  ///< Cholesky when p' <= 4n, Woodbury otherwise.
  cholesky,   ///< p' x p' system  X'X/n + Lambda.
  woodbury,   ///< n x n system  I + X Lambda^-1 X'/n.
};

/// Group-ridge solution at a fixed penalty vector.
///
/// Minimizes (1/2n)||Y - Xw||^2 + sum_g (lambda_g/2)||w_g||^2, so
/// coef = (X'X/n + Lambda)^-1 X'Y/n and the hat matrix is
/// X (X'X + n Lambda)^-1 X'. Columns of dropped groups are exactly zero.
struct RidgeFit {
  RegVector lambda;
  Vector coef;
  Vector fitted;
  Vector hat_diag;
  /// Shortcut leave-one-out error; NaN when some leverage is numerically 1.
  double cv_star = 0.0;
  SolverPath path_used = SolverPath::automatic;
};

RidgeFit fit_group_ridge(const GroupedDesign& design, const RegVector& lambda,
                         SolverPath path = SolverPath::automatic);

/// Coefficients only; skips the leverage computation.
Vector ridge_coefficients(const GroupedDesign& design, const RegVector& lambda,
                          SolverPath path = SolverPath::automatic);

/// (1/n) sum ((Y_i - fitted_i) / (1 - H_ii))^2.
/// Throws DegenerateLeverageError if some H_ii >= 1 - 1e-12.
double cv_star(const RidgeFit& fit, const GroupedDesign& design);

/// Glmnet-style default: 1e3 * ||X'Y/n||_inf.
double default_lambda_max(const GroupedDesign& design);

/// `count` log-spaced points from lo_frac * lambda_max to lambda_max, ascending.
std::vector<double> log_grid(double hi, std::size_t count, double lo_frac);

/// Leave-one-out curve for a single shared penalty, evaluated on a grid.
struct SingleLambdaTuning {
  double lambda_init = 0.0;
  std::vector<double> grid;
  std::vector<double> cv;
};

/// Minimizes CV*((lambda, ..., lambda)) over the 100-point log grid
/// [1e-6, 1] * lambda_max. Ties go to the larger lambda.
SingleLambdaTuning tune_single_lambda(const GroupedDesign& design, std::size_t grid_size = 100,
                                      double lo_frac = 1e-6);

/// CV* of a single shared penalty, reusing one spectral decomposition of the
/// design across penalty values.
class SingleLambdaCurve {
 public:
  explicit SingleLambdaCurve(const GroupedDesign& design);
  double cv_star(double lambda) const;

 private:
  Matrix u_;          // n x r left singular vectors
  Matrix u_sq_;       // entrywise squares of u_
  Vector eig_;        // squared singular values
  Vector uty_;        // u' Y
  Vector y_;
  double n_;
};

/// Multi-lambda grid search: `num_points` random points of the product grid
/// (grid^K), picking the smallest CV*. Ties go to the earlier draw.
struct MultiLambdaTuning {
  RegVector lambda;
  double cv_star = 0.0;
};
MultiLambdaTuning tune_multi_lambda(const GroupedDesign& design, std::uint64_t seed,
                                    std::size_t num_points = 5000, std::size_t grid_size = 100);

}  // namespace sigmaridge
