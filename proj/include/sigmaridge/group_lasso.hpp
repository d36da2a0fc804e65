#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sigmaridge/core.hpp"
#include "sigmaridge/linalg.hpp"

namespace sigmaridge {

/// Minimizer of (1/2n)||Y - Xw||^2 + lambda_gl * sum_g sqrt(p_g/p) ||w_g||_2.
struct GroupLassoFit {
  double lambda_gl = 0.0;
  Vector coef;
  std::vector<std::size_t> active_groups;
  /// lambda_g = lambda_gl sqrt(p_g/p) / ||w_g|| (inf for inactive groups).
  /// Group ridge at these penalties reproduces `coef`. Empty when lambda_gl = 0.
  std::optional<RegVector> induced_lambda;
  double kkt_residual = 0.0;
  std::size_t sweeps = 0;
  /// Objective after each sweep, when requested.
  std::vector<double> objective_trace;
};

struct GroupLassoOptions {
  double tolerance = 1e-8;
  std::size_t max_sweeps = 100000;
  bool record_objective = false;
};

/// Cyclic block coordinate descent with exact block minimization.
///
/// Each block problem is solved in the eigenbasis of X_g'X_g/n by a
/// one-dimensional root find for ||w_g||. Group blocks are decomposed once
/// and reused across penalty values.
class GroupLassoSolver {
 public:
  explicit GroupLassoSolver(const GroupedDesign& design);

  GroupLassoFit fit(double lambda_gl, const GroupLassoOptions& options = {},
                    const Vector* warm_start = nullptr) const;

  /// max_g ||grad_g||_inf / sqrt(p_g/p) with the gradient at w = 0.
  double lambda_max_inf() const;
  /// Exact zero threshold: max_g ||grad_g||_2 / sqrt(p_g/p).
  double zero_threshold() const;

  double objective(const Vector& coef, double lambda_gl) const;
  /// Largest violation of the optimality conditions at `coef`.
  double kkt_residual(const Vector& coef, double lambda_gl) const;

 private:
  const GroupedDesign* design_;
  std::vector<Matrix> blocks_;                  // X_g columns
  std::vector<linalg::SymmetricEigen> eig_;     // of X_g'X_g/n
  std::vector<double> weights_;                 // sqrt(p_g/p)
};

GroupLassoFit fit_group_lasso(const GroupedDesign& design, double lambda_gl,
                              const GroupLassoOptions& options = {});

/// n^-1 max_g ||(X'Y)_g||_inf / sqrt(p_g/p).
double group_lasso_lambda_max(const GroupedDesign& design);

struct HoldoutSplit {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Seeded shuffle; floor(fraction * n) rows go to the test side.
HoldoutSplit holdout_split(std::size_t n, double fraction, std::uint64_t seed);

struct GroupLassoTuning {
  double lambda_gl = 0.0;
  GroupLassoFit fit;
  std::vector<double> grid;
  std::vector<double> holdout_mse;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Picks lambda_gl on a 100-point log grid [1e-6, 1] * lambda_max (computed
/// on the training rows) by holdout MSE, then refits on all rows.
GroupLassoTuning tune_group_lasso(const GroupedDesign& design, double holdout_fraction,
                                  std::uint64_t seed, std::size_t grid_size = 100);

}  // namespace sigmaridge
