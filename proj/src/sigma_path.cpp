#include "sigmaridge/sigma_path.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "sigmaridge/linalg.hpp"
#include "sigmaridge/nnls.hpp"
#include "sigmaridge/parallel.hpp"

namespace sigmaridge {

MomentSystem build_moment_system(const GroupedDesign& design, double lambda_init) {
  if (!(lambda_init > 0.0) || !std::isfinite(lambda_init)) {
    throw ValidationError("lambda_init must be positive and finite");
  }
  const auto& layout = design.layout;
  const Eigen::Index n = design.n();
  const Eigen::Index p = design.p();
  const double nd = static_cast<double>(n);

  const Matrix s = linalg::gram_columns(design.X, nd);
  Matrix g_inv;
  if (p <= 4 * n) {
    Matrix g = s;
    g.diagonal().array() += lambda_init;
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) throw NumericError("pilot ridge system is not positive definite");
    g_inv = llt.solve(Matrix::Identity(p, p));
  } else {
    // G^-1 = (I - X'(n lambda I + X X')^-1 X) / lambda
    Matrix inner = linalg::gram_rows(design.X, 1.0);
    inner.diagonal().array() += nd * lambda_init;
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success) throw NumericError("pilot Woodbury system is not positive definite");
    g_inv = (Matrix::Identity(p, p) - design.X.transpose() * llt.solve(design.X)) / lambda_init;
  }

  const Matrix m = g_inv * s;
  // diag(N N') = diag(G^-1 S G^-1) = diag(M G^-1)
  const Vector nn_diag = m.cwiseProduct(g_inv.transpose()).rowwise().sum();
  const Vector w_tilde = g_inv * (design.X.transpose() * design.Y) / nd;

  const std::size_t k = layout.num_groups();
  const auto ki = static_cast<Eigen::Index>(k);
  MomentSystem ms;
  ms.A = Matrix::Zero(ki, ki);
  ms.u_hat = Vector::Zero(ki);
  ms.v = Vector::Zero(ki);
  ms.lambda_init = lambda_init;
  ms.n = static_cast<std::size_t>(n);
  ms.group_sizes = layout.sizes();

  const auto& member = layout.membership();
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto h = static_cast<Eigen::Index>(member[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < p; ++i) {
      ms.A(static_cast<Eigen::Index>(member[static_cast<std::size_t>(i)]), h) += m(i, j) * m(i, j);
    }
  }
  ms.A /= nd;
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto g = static_cast<Eigen::Index>(member[static_cast<std::size_t>(i)]);
    ms.u_hat(g) += w_tilde(i) * w_tilde(i);
    ms.v(g) += nn_diag(i);
  }
  ms.v /= nd;
  ms.v = ms.v.cwiseMax(0.0);
  return ms;
}

SigmaPathPoint lambda_of_sigma(const MomentSystem& ms, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive and finite");
  const Eigen::Index k = ms.u_hat.size();

  std::vector<Eigen::Index> usable;
  for (Eigen::Index g = 0; g < k; ++g) {
    if (ms.u_hat(g) > 0.0) usable.push_back(g);
  }

  SigmaPathPoint point;
  point.sigma = sigma;
  Vector lambda = Vector::Constant(k, kInf);
  if (!usable.empty()) {
    const Vector b = ms.u_hat / (sigma * sigma) - ms.v;
    const Matrix a = linalg::select_columns(ms.A, usable);
    const NnlsSolution sol = solve_nnls(a, b);
    point.rank_deficient = sol.rank_deficient;
    for (std::size_t c = 0; c < usable.size(); ++c) {
      const double d = sol.d(static_cast<Eigen::Index>(c));
      if (d >= kMinInversePenalty) lambda(usable[c]) = 1.0 / d;
    }
  }
  point.lambda = RegVector(lambda);
  for (Eigen::Index g = 0; g < k; ++g) {
    if (std::isfinite(lambda(g))) point.active_set.push_back(static_cast<std::size_t>(g));
  }
  return point;
}

double sigma_max(const MomentSystem& ms) {
  double ratio = 0.0;
  for (Eigen::Index g = 0; g < ms.v.size(); ++g) {
    if (!(ms.v(g) > 0.0)) {
      throw NumericError("degenerate pilot fit: v_" + std::to_string(g) + " = 0");
    }
    ratio = std::max(ratio, ms.u_hat(g) / ms.v(g));
  }
  return std::sqrt(ratio);
}

std::vector<double> linear_grid(double hi, std::size_t count, double lo_frac) {
  if (!(hi > 0.0) || !std::isfinite(hi)) throw ValidationError("grid upper end must be positive and finite");
  if (!(lo_frac > 0.0) || lo_frac > 1.0) throw ValidationError("grid lower fraction must be in (0, 1]");
  if (count == 0) throw ValidationError("grid needs at least one point");
  std::vector<double> grid(count, hi);
  const double lo = lo_frac * hi;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

namespace {

struct LambdaLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }
};

}  // namespace

std::vector<SigmaPathPoint> evaluate_sigma_path(const GroupedDesign& design, const MomentSystem& ms,
                                                const std::vector<double>& sigmas) {
  std::vector<SigmaPathPoint> path;
  path.reserve(sigmas.size());
  for (double s : sigmas) path.push_back(lambda_of_sigma(ms, s));

  std::map<Vector, std::size_t, LambdaLess> unique;
  std::vector<std::size_t> slot(path.size());
  std::vector<const RegVector*> to_fit;
  for (std::size_t i = 0; i < path.size(); ++i) {
    auto [it, inserted] = unique.emplace(path[i].lambda.values(), to_fit.size());
    if (inserted) to_fit.push_back(&path[i].lambda);
    slot[i] = it->second;
  }

  std::vector<double> cv(to_fit.size());
  parallel_for(to_fit.size(), [&](std::size_t u) {
    const double v = fit_group_ridge(design, *to_fit[u]).cv_star;
    cv[u] = std::isnan(v) ? kInf : v;
  });
  for (std::size_t i = 0; i < path.size(); ++i) path[i].cv_star = cv[slot[i]];
  return path;
}

SigmaRidgeResult fit_sigma_ridge(const GroupedDesign& design, const SigmaRidgeOptions& options) {
  if (design.n() < 3) throw ValidationError("sigma-ridge needs n >= 3");

  SigmaRidgeResult out;
  const double lambda_init =
      options.lambda_init ? *options.lambda_init : tune_single_lambda(design).lambda_init;
  out.moments = build_moment_system(design, lambda_init);
  for (Eigen::Index g = 0; g < out.moments.u_hat.size(); ++g) {
    if (!(out.moments.u_hat(g) > 0.0)) {
      out.warnings.push_back("group " + design.layout.labels()[static_cast<std::size_t>(g)] +
                             " has a zero pilot estimate; its penalty is set to inf");
    }
  }
  out.sigma_max = sigma_max(out.moments);
  if (!(out.sigma_max > 0.0)) throw NumericError("sigma_max is zero: the pilot fit is identically zero");

  out.path = evaluate_sigma_path(design, out.moments, linear_grid(out.sigma_max, options.grid_size, options.lo_frac));

  std::size_t best = 0;
  double best_cv = kInf;
  bool rank_deficient = false;
  for (std::size_t i = 0; i < out.path.size(); ++i) {
    rank_deficient = rank_deficient || out.path[i].rank_deficient;
    if (out.path[i].cv_star <= best_cv) {
      best_cv = out.path[i].cv_star;
      best = i;
    }
  }
  if (!std::isfinite(best_cv)) throw NumericError("no sigma grid point has a finite CV*");
  if (rank_deficient) out.warnings.push_back("moment matrix A is rank deficient; minimum-norm NNLS points used");

  out.best = out.path[best];
  out.fit = fit_group_ridge(design, out.best.lambda);
  if (out.best.lambda.all_dropped()) {
    out.warnings.push_back("selected sigma drops every group: the fit is the zero predictor");
  }
  return out;
}

}  // namespace sigmaridge
