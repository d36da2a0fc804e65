#include "sigmaridge/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sigmaridge/ridge.hpp"

namespace sigmaridge {

namespace {

// Solves min_w (1/2) w'Qw - z'w + thr ||w|| in the eigenbasis of Q, given
// zp = V'z. Returns coordinates in the eigenbasis.
Vector block_minimizer(const Vector& q, const Vector& zp, double thr) {
  const double z_norm = zp.norm();
  if (z_norm <= thr) return Vector::Zero(zp.size());

  const double cutoff = 1e-12 * std::max(1.0, q.maxCoeff());
  if (thr == 0.0) {
    Vector w = Vector::Zero(zp.size());
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      if (q(k) > cutoff) w(k) = zp(k) / q(k);
    }
    return w;
  }

  double null_sq = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    if (q(k) <= cutoff) null_sq += zp(k) * zp(k);
  }
  if (null_sq >= thr * thr) throw NumericError("group lasso block problem is unbounded");

  // phi(t) = sum zp_k^2 / (q_k t + thr)^2 - 1 is convex and decreasing, so
  // Newton from t = 0 increases monotonically to the root t = ||w_g||.
  double t = 0.0;
  for (int iter = 0;; ++iter) {
    if (iter > 500) throw NumericError("group lasso block root-find did not converge");
    const Eigen::ArrayXd denom = q.array() * t + thr;
    const double phi = (zp.array().square() / denom.square()).sum() - 1.0;
    if (phi <= 1e-15) break;
    const double dphi = -2.0 * (zp.array().square() * q.array() / denom.cube()).sum();
    if (!(dphi < 0.0)) throw NumericError("group lasso block root-find stalled");
    const double step = -phi / dphi;
    t += step;
    if (step <= 1e-15 * t) break;
  }
  return (zp.array() * t / (q.array() * t + thr)).matrix();
}

}  // namespace

GroupLassoSolver::GroupLassoSolver(const GroupedDesign& design) : design_(&design) {
  const auto& layout = design.layout;
  const double nd = static_cast<double>(design.n());
  const double p = static_cast<double>(design.p());
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    std::vector<Eigen::Index> cols(layout.columns(g).begin(), layout.columns(g).end());
    blocks_.push_back(linalg::select_columns(design.X, cols));
    eig_.push_back(linalg::symmetric_eigen(linalg::gram_columns(blocks_.back(), nd)));
    eig_.back().values = eig_.back().values.cwiseMax(0.0);
    weights_.push_back(std::sqrt(static_cast<double>(layout.size(g)) / p));
  }
}

double GroupLassoSolver::lambda_max_inf() const {
  const Vector grad = design_->X.transpose() * design_->Y / static_cast<double>(design_->n());
  double out = 0.0;
  const auto& layout = design_->layout;
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    double m = 0.0;
    for (auto j : layout.columns(g)) m = std::max(m, std::abs(grad(static_cast<Eigen::Index>(j))));
    out = std::max(out, m / weights_[g]);
  }
  return out;
}

double GroupLassoSolver::zero_threshold() const {
  const Vector grad = design_->X.transpose() * design_->Y / static_cast<double>(design_->n());
  double out = 0.0;
  const auto& layout = design_->layout;
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    double sq = 0.0;
    for (auto j : layout.columns(g)) sq += grad(static_cast<Eigen::Index>(j)) * grad(static_cast<Eigen::Index>(j));
    out = std::max(out, std::sqrt(sq) / weights_[g]);
  }
  return out;
}

double GroupLassoSolver::objective(const Vector& coef, double lambda_gl) const {
  const double nd = static_cast<double>(design_->n());
  double value = (design_->Y - design_->X * coef).squaredNorm() / (2.0 * nd);
  const auto& layout = design_->layout;
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    double sq = 0.0;
    for (auto j : layout.columns(g)) sq += coef(static_cast<Eigen::Index>(j)) * coef(static_cast<Eigen::Index>(j));
    value += lambda_gl * weights_[g] * std::sqrt(sq);
  }
  return value;
}

double GroupLassoSolver::kkt_residual(const Vector& coef, double lambda_gl) const {
  const double nd = static_cast<double>(design_->n());
  const Vector grad = -design_->X.transpose() * (design_->Y - design_->X * coef) / nd;
  const auto& layout = design_->layout;
  double worst = 0.0;
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    const auto& cols = layout.columns(g);
    Vector wg(static_cast<Eigen::Index>(cols.size()));
    Vector gg(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      wg(static_cast<Eigen::Index>(k)) = coef(static_cast<Eigen::Index>(cols[k]));
      gg(static_cast<Eigen::Index>(k)) = grad(static_cast<Eigen::Index>(cols[k]));
    }
    const double thr = lambda_gl * weights_[g];
    const double norm = wg.norm();
    if (norm > 0.0) {
      worst = std::max(worst, (gg + thr * wg / norm).cwiseAbs().maxCoeff());
    } else {
      worst = std::max(worst, gg.norm() - thr);
    }
  }
  return worst;
}

GroupLassoFit GroupLassoSolver::fit(double lambda_gl, const GroupLassoOptions& options,
                                    const Vector* warm_start) const {
  if (!(lambda_gl >= 0.0) || !std::isfinite(lambda_gl)) {
    throw ValidationError("group lasso penalty must be finite and >= 0");
  }
  const auto& design = *design_;
  const auto& layout = design.layout;
  const double nd = static_cast<double>(design.n());
  const std::size_t k = layout.num_groups();

  GroupLassoFit out;
  out.lambda_gl = lambda_gl;
  out.coef = warm_start ? *warm_start : Vector::Zero(design.p());
  if (out.coef.size() != design.p()) throw ValidationError("warm start has the wrong length");

  // Per-group coefficients kept contiguous; the residual is kept current.
  std::vector<Vector> w(k);
  for (std::size_t g = 0; g < k; ++g) {
    const auto& cols = layout.columns(g);
    w[g].resize(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) w[g](static_cast<Eigen::Index>(c)) = out.coef(static_cast<Eigen::Index>(cols[c]));
  }
  Vector resid = design.Y - design.X * out.coef;

  auto gather = [&] {
    for (std::size_t g = 0; g < k; ++g) {
      const auto& cols = layout.columns(g);
      for (std::size_t c = 0; c < cols.size(); ++c) out.coef(static_cast<Eigen::Index>(cols[c])) = w[g](static_cast<Eigen::Index>(c));
    }
  };

  double kkt = kkt_residual(out.coef, lambda_gl);
  std::size_t sweep = 0;
  while (kkt > options.tolerance) {
    if (sweep >= options.max_sweeps) {
      gather();
      throw ConvergenceError("group lasso did not reach KKT tolerance in " +
                                 std::to_string(options.max_sweeps) + " sweeps (residual " +
                                 std::to_string(kkt) + ")",
                             kkt);
    }
    ++sweep;
    for (std::size_t g = 0; g < k; ++g) {
      const auto& eig = eig_[g];
      const Vector z = blocks_[g].transpose() * resid / nd +
                       eig.vectors * (eig.values.asDiagonal() * (eig.vectors.transpose() * w[g]));
      const Vector w_new = eig.vectors * block_minimizer(eig.values, eig.vectors.transpose() * z, lambda_gl * weights_[g]);
      const Vector delta = w_new - w[g];
      if (delta.squaredNorm() > 0.0) {
        resid.noalias() -= blocks_[g] * delta;
        w[g] = w_new;
      }
    }
    gather();
    // Refresh the residual so rounding does not accumulate over long runs.
    resid = design.Y - design.X * out.coef;
    if (options.record_objective) out.objective_trace.push_back(objective(out.coef, lambda_gl));
    kkt = kkt_residual(out.coef, lambda_gl);
  }
  gather();
  out.sweeps = sweep;
  out.kkt_residual = kkt;

  Vector induced = Vector::Constant(static_cast<Eigen::Index>(k), kInf);
  for (std::size_t g = 0; g < k; ++g) {
    const double norm = w[g].norm();
    if (norm > 0.0) {
      out.active_groups.push_back(g);
      induced(static_cast<Eigen::Index>(g)) = lambda_gl * weights_[g] / norm;
    }
  }
  if (lambda_gl > 0.0) out.induced_lambda = RegVector(induced);
  return out;
}

GroupLassoFit fit_group_lasso(const GroupedDesign& design, double lambda_gl, const GroupLassoOptions& options) {
  return GroupLassoSolver(design).fit(lambda_gl, options);
}

double group_lasso_lambda_max(const GroupedDesign& design) { return GroupLassoSolver(design).lambda_max_inf(); }

HoldoutSplit holdout_split(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("holdout fraction must be in (0, 1)");
  const auto n_test = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n_test < 2) throw ValidationError("holdout set needs at least 2 rows");
  if (n_test >= n) throw ValidationError("holdout leaves no training rows");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  HoldoutSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

GroupLassoTuning tune_group_lasso(const GroupedDesign& design, double holdout_fraction, std::uint64_t seed,
                                  std::size_t grid_size) {
  const auto split = holdout_split(static_cast<std::size_t>(design.n()), holdout_fraction, seed);
  auto rows = [&](const std::vector<Eigen::Index>& idx) {
    Matrix x(static_cast<Eigen::Index>(idx.size()), design.p());
    Vector y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = design.X.row(idx[i]);
      y(static_cast<Eigen::Index>(i)) = design.Y(idx[i]);
    }
    return GroupedDesign(std::move(x), std::move(y), design.layout);
  };
  const GroupedDesign train = rows(split.train);
  const GroupedDesign test = rows(split.test);

  const GroupLassoSolver solver(train);
  const double lambda_max = solver.lambda_max_inf();
  if (!(lambda_max > 0.0)) throw ValidationError("X'Y = 0 on the training rows: flat response");

  GroupLassoTuning out;
  out.grid = log_grid(lambda_max, grid_size, 1e-6);
  out.holdout_mse.assign(out.grid.size(), kInf);
  out.n_train = split.train.size();
  out.n_test = split.test.size();

  // Warm-started path from the largest penalty down.
  Vector warm = Vector::Zero(design.p());
  for (std::size_t i = out.grid.size(); i-- > 0;) {
    const GroupLassoFit fit = solver.fit(out.grid[i], {}, &warm);
    warm = fit.coef;
    out.holdout_mse[i] = (test.Y - test.X * fit.coef).squaredNorm() / static_cast<double>(test.n());
  }

  double best = kInf;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    if (out.holdout_mse[i] <= best) {
      best = out.holdout_mse[i];
      out.lambda_gl = out.grid[i];
    }
  }
  out.fit = GroupLassoSolver(design).fit(out.lambda_gl);
  return out;
}

}  // namespace sigmaridge
