#include "sigmaridge/ridge.hpp"

#include <cmath>
#include <random>

#include "sigmaridge/linalg.hpp"
#include "sigmaridge/parallel.hpp"

namespace sigmaridge {

namespace {

constexpr double kLeverageCeiling = 1.0 - 1e-12;

double shortcut_loocv(const Vector& y, const Vector& fitted, const Vector& hat_diag) {
  if ((hat_diag.array() >= kLeverageCeiling).any()) {
    throw DegenerateLeverageError("leave-one-out leverage H_ii is numerically 1");
  }
  return ((y - fitted).array() / (1.0 - hat_diag.array())).square().mean();
}

RidgeFit solve_ridge(const GroupedDesign& design, const RegVector& lambda, SolverPath path, bool with_hat) {
  const auto& layout = design.layout;
  if (lambda.size() != layout.num_groups()) {
    throw ValidationError("lambda has " + std::to_string(lambda.size()) + " entries but design has " +
                          std::to_string(layout.num_groups()) + " groups");
  }
  const Eigen::Index n = design.n();
  const double nd = static_cast<double>(n);

  std::vector<Eigen::Index> active;
  for (std::size_t j = 0; j < layout.num_features(); ++j) {
    if (!lambda.is_dropped(layout.group_of(j))) active.push_back(static_cast<Eigen::Index>(j));
  }
  const auto p_active = static_cast<Eigen::Index>(active.size());

  RidgeFit fit;
  fit.lambda = lambda;
  fit.coef = Vector::Zero(design.p());
  fit.fitted = Vector::Zero(n);
  fit.hat_diag = Vector::Zero(n);

  if (p_active == 0) {
    fit.path_used = path;
    fit.cv_star = design.Y.squaredNorm() / nd;
    return fit;
  }

  const Matrix xs = linalg::select_columns(design.X, active);
  Vector penalty(p_active);
  for (Eigen::Index k = 0; k < p_active; ++k) {
    penalty(k) = lambda[layout.group_of(static_cast<std::size_t>(active[static_cast<std::size_t>(k)]))];
  }

  if (path == SolverPath::automatic) {
    path = p_active <= 4 * n ? SolverPath::cholesky : SolverPath::woodbury;
  }
  fit.path_used = path;

  Vector coef_active;
  if (path == SolverPath::cholesky) {
    Matrix system = linalg::gram_columns(xs, nd);
    system.diagonal() += penalty;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
    coef_active = llt.solve(xs.transpose() * design.Y / nd);
    if (with_hat) {
      // H_ii = x_i' (X'X/n + Lambda)^-1 x_i / n = ||L^-1 x_i||^2 / n
      const Matrix z = llt.matrixL().solve(xs.transpose());
      fit.hat_diag = z.colwise().squaredNorm().transpose() / nd;
    }
  } else {
    const Vector inv_penalty = penalty.cwiseInverse();
    Matrix system = linalg::gram_rows(xs * inv_penalty.cwiseSqrt().asDiagonal(), nd);
    system.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw NumericError("Woodbury system is not positive definite");
    const Vector alpha = llt.solve(design.Y);
    coef_active = inv_penalty.asDiagonal() * (xs.transpose() * alpha) / nd;
    if (with_hat) {
      // H = I - (I + X Lambda^-1 X'/n)^-1
      const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(n, n));
      fit.hat_diag = (1.0 - l_inv.colwise().squaredNorm().transpose().array()).matrix();
    }
  }

  for (Eigen::Index k = 0; k < p_active; ++k) fit.coef(active[static_cast<std::size_t>(k)]) = coef_active(k);
  fit.fitted = xs * coef_active;

  if (!with_hat) {
    fit.cv_star = std::numeric_limits<double>::quiet_NaN();
  } else if ((fit.hat_diag.array() >= kLeverageCeiling).any()) {
    fit.cv_star = std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.cv_star = shortcut_loocv(design.Y, fit.fitted, fit.hat_diag);
  }
  return fit;
}

}  // namespace

RidgeFit fit_group_ridge(const GroupedDesign& design, const RegVector& lambda, SolverPath path) {
  return solve_ridge(design, lambda, path, true);
}

Vector ridge_coefficients(const GroupedDesign& design, const RegVector& lambda, SolverPath path) {
  return solve_ridge(design, lambda, path, false).coef;
}

double cv_star(const RidgeFit& fit, const GroupedDesign& design) {
  if (fit.fitted.size() != design.n() || fit.hat_diag.size() != design.n()) {
    throw ValidationError("fit does not match the design");
  }
  return shortcut_loocv(design.Y, fit.fitted, fit.hat_diag);
}

double default_lambda_max(const GroupedDesign& design) {
  return 1e3 * (design.X.transpose() * design.Y).cwiseAbs().maxCoeff() / static_cast<double>(design.n());
}

std::vector<double> log_grid(double hi, std::size_t count, double lo_frac) {
  if (!(hi > 0.0) || !std::isfinite(hi)) throw ValidationError("grid upper end must be positive and finite");
  if (!(lo_frac > 0.0) || lo_frac > 1.0) throw ValidationError("grid lower fraction must be in (0, 1]");
  if (count == 0) throw ValidationError("grid needs at least one point");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  const double log_lo = std::log(hi * lo_frac);
  const double log_hi = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = std::exp(log_lo + t * (log_hi - log_lo));
  }
  grid.back() = hi;
  return grid;
}

SingleLambdaCurve::SingleLambdaCurve(const GroupedDesign& design)
    : y_(design.Y), n_(static_cast<double>(design.n())) {
  const Matrix& x = design.X;
  // Decompose the smaller Gram matrix; either way H(lambda) = U diag(e/(e + n lambda)) U'.
  if (x.rows() <= x.cols()) {
    auto eig = linalg::symmetric_eigen(linalg::gram_rows(x, 1.0));
    eig_ = eig.values.cwiseMax(0.0);
    u_ = std::move(eig.vectors);
  } else {
    auto eig = linalg::symmetric_eigen(linalg::gram_columns(x, 1.0));
    const double cutoff = 1e-12 * std::max(1.0, eig.values.maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
      if (eig.values(k) > cutoff) keep.push_back(k);
    }
    eig_.resize(static_cast<Eigen::Index>(keep.size()));
    u_.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const auto k = keep[i];
      const auto col = static_cast<Eigen::Index>(i);
      eig_(col) = eig.values(k);
      u_.col(col) = x * eig.vectors.col(k) / std::sqrt(eig.values(k));
    }
  }
  u_sq_ = u_.cwiseAbs2();
  uty_ = u_.transpose() * y_;
}

double SingleLambdaCurve::cv_star(double lambda) const {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  const Vector shrink = (eig_.array() / (eig_.array() + n_ * lambda)).matrix();
  const Vector hat = u_sq_ * shrink;
  const Vector fitted = u_ * shrink.cwiseProduct(uty_);
  return shortcut_loocv(y_, fitted, hat);
}

SingleLambdaTuning tune_single_lambda(const GroupedDesign& design, std::size_t grid_size,
                                      double lo_frac) {
  const double lambda_max = default_lambda_max(design);
  if (!(lambda_max > 0.0)) throw ValidationError("X'Y = 0: flat response, cannot set lambda_max");

  SingleLambdaTuning out;
  out.grid = log_grid(lambda_max, grid_size, lo_frac);
  out.cv.resize(out.grid.size());
  const SingleLambdaCurve curve(design);
  double best = kInf;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    double value = kInf;
    try {
      value = curve.cv_star(out.grid[i]);
    } catch (const DegenerateLeverageError&) {
    }
    out.cv[i] = value;
    if (value <= best) {
      best = value;
      out.lambda_init = out.grid[i];
    }
  }
  if (!std::isfinite(best)) throw NumericError("no grid point has a finite leave-one-out error");
  return out;
}

MultiLambdaTuning tune_multi_lambda(const GroupedDesign& design, std::uint64_t seed,
                                    std::size_t num_points, std::size_t grid_size) {
  const double lambda_max = default_lambda_max(design);
  if (!(lambda_max > 0.0)) throw ValidationError("X'Y = 0: flat response, cannot set lambda_max");
  const auto grid = log_grid(lambda_max, grid_size, 1e-6);
  const std::size_t k = design.layout.num_groups();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  std::vector<Vector> candidates(num_points, Vector(static_cast<Eigen::Index>(k)));
  for (auto& c : candidates) {
    for (Eigen::Index g = 0; g < c.size(); ++g) c(g) = grid[pick(rng)];
  }

  std::vector<double> cv(num_points, kInf);
  parallel_for(num_points, [&](std::size_t i) {
    const double v = fit_group_ridge(design, RegVector(candidates[i])).cv_star;
    cv[i] = std::isnan(v) ? kInf : v;
  });

  MultiLambdaTuning out;
  out.cv_star = kInf;
  std::size_t best = 0;
  for (std::size_t i = 0; i < num_points; ++i) {
    if (cv[i] < out.cv_star) {
      out.cv_star = cv[i];
      best = i;
    }
  }
  if (!std::isfinite(out.cv_star)) throw NumericError("no multi-lambda candidate has a finite CV*");
  out.lambda = RegVector(candidates[best]);
  return out;
}

}  // namespace sigmaridge
