#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sigmaridge/core.hpp"
#include "sigmaridge/ridge.hpp"

namespace sigmaridge {

/// Moment relations of the pilot ridge fit at lambda_init.
///
/// With G = X'X/n + lambda_init I, M = G^-1 X'X/n and N = G^-1 X'/sqrt(n):
///   A_gh = ||M_{g,h}||_F^2 / n,  u_hat_g = ||w_tilde_g||^2,
///   v_g  = ||N_{g,.}||_F^2 / n,  w_tilde = G^-1 X'Y/n.
struct MomentSystem {
  Matrix A;
  Vector u_hat;
  Vector v;
  double lambda_init = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> group_sizes;

  std::size_t num_groups() const noexcept { return static_cast<std::size_t>(u_hat.size()); }
};

MomentSystem build_moment_system(const GroupedDesign& design, double lambda_init);

struct SigmaPathPoint {
  double sigma = 0.0;
  RegVector lambda;
  /// Groups with finite lambda, ascending.
  std::vector<std::size_t> active_set;
  /// Filled in by path evaluation; NaN for a bare lambda_of_sigma call.
  double cv_star = std::numeric_limits<double>::quiet_NaN();
  bool rank_deficient = false;
};

/// d_g below this is read as zero, i.e. lambda_g = inf.
inline constexpr double kMinInversePenalty = 1e-12;

/// lambda_g = 1/d_g, d = argmin_{d >= 0} ||A d - (u_hat/sigma^2 - v)||.
/// Groups whose pilot norm u_hat_g is zero are excluded (lambda_g = inf).
SigmaPathPoint lambda_of_sigma(const MomentSystem& ms, double sigma);

/// sqrt(max_g u_hat_g / v_g): every penalty is infinite at and above it.
/// Throws NumericError if some v_g = 0.
double sigma_max(const MomentSystem& ms);

/// `count` equidistant points in [lo_frac * hi, hi], ascending.
std::vector<double> linear_grid(double hi, std::size_t count, double lo_frac);

struct SigmaRidgeOptions {
  std::size_t grid_size = 100;
  double lo_frac = 1e-3;
  /// Pilot penalty; tuned by single-lambda LOOCV when empty.
  std::optional<double> lambda_init;
};

struct SigmaRidgeResult {
  SigmaPathPoint best;
  RidgeFit fit;
  std::vector<SigmaPathPoint> path;
  MomentSystem moments;
  double sigma_max = 0.0;
  std::vector<std::string> warnings;
};

/// Full estimator: pilot fit, moment system, sigma grid, accelerated LOOCV
/// (lambda_hat(sigma) held fixed across folds). Ties go to the larger sigma.
SigmaRidgeResult fit_sigma_ridge(const GroupedDesign& design, const SigmaRidgeOptions& options = {});

/// Evaluates CV* along a given sigma grid. Refits are shared between grid
/// points with identical penalty vectors.
std::vector<SigmaPathPoint> evaluate_sigma_path(const GroupedDesign& design, const MomentSystem& ms,
                                                const std::vector<double>& sigmas);

}  // namespace sigmaridge
