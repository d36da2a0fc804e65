#pragma once

#include <random>
#include <vector>

#include "sigmaridge/core.hpp"

namespace testing_support {

using sigmaridge::GroupedDesign;
using sigmaridge::GroupLayout;
using sigmaridge::Matrix;
using sigmaridge::Vector;

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index size) {
  return gaussian_matrix(rng, size, 1).col(0);
}

inline std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random contiguous sizes summing to p with each size >= 1.
inline std::vector<std::size_t> random_sizes(std::mt19937_64& rng, std::size_t p, std::size_t k) {
  std::vector<std::size_t> sizes(k, 1);
  for (std::size_t extra = p - k; extra > 0; --extra) ++sizes[uniform_int(rng, 0, k - 1)];
  return sizes;
}

/// Random-effects instance with group signal and Gaussian noise.
inline GroupedDesign random_design(std::mt19937_64& rng, std::size_t n, std::size_t p, std::size_t k,
                                   double noise = 1.0) {
  const auto sizes = random_sizes(rng, p, k);
  GroupLayout layout = GroupLayout::contiguous(sizes);
  Matrix x = gaussian_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Vector w(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const double scale = static_cast<double>(layout.group_of(j) + 1) / std::sqrt(static_cast<double>(p));
    w(static_cast<Eigen::Index>(j)) = scale * std::normal_distribution<double>()(rng);
  }
  Vector y = x * w + noise * gaussian_vector(rng, static_cast<Eigen::Index>(n));
  return GroupedDesign(std::move(x), std::move(y), std::move(layout));
}

/// Random penalty vector with log-uniform entries in [lo, hi].
inline sigmaridge::RegVector random_lambda(std::mt19937_64& rng, std::size_t k, double lo = 1e-2, double hi = 1e1) {
  Vector v(static_cast<Eigen::Index>(k));
  for (Eigen::Index g = 0; g < v.size(); ++g) v(g) = std::exp(uniform_real(rng, std::log(lo), std::log(hi)));
  return sigmaridge::RegVector(v);
}

/// Ridge by QR on the augmented least-squares system [X; sqrt(n Lambda)] w = [Y; 0],
/// with dropped columns removed. Independent of the library's normal-equation paths.
inline Vector ridge_by_qr(const GroupedDesign& d, const sigmaridge::RegVector& lambda) {
  const auto n = d.n();
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < d.layout.num_features(); ++j) {
    if (!lambda.is_dropped(d.layout.group_of(j))) keep.push_back(static_cast<Eigen::Index>(j));
  }
  Vector out = Vector::Zero(d.p());
  if (keep.empty()) return out;
  const auto q = static_cast<Eigen::Index>(keep.size());
  Matrix a = Matrix::Zero(n + q, q);
  Vector b = Vector::Zero(n + q);
  b.head(n) = d.Y;
  for (Eigen::Index c = 0; c < q; ++c) {
    a.col(c).head(n) = d.X.col(keep[static_cast<std::size_t>(c)]);
    a(n + c, c) = std::sqrt(static_cast<double>(n) * lambda[d.layout.group_of(static_cast<std::size_t>(keep[static_cast<std::size_t>(c)]))]);
  }
  const Vector sol = a.colPivHouseholderQr().solve(b);
  for (Eigen::Index c = 0; c < q; ++c) out(keep[static_cast<std::size_t>(c)]) = sol(c);
  return out;
}

/// Explicit leave-one-out error at fixed lambda by n refits.
inline double brute_force_loocv(const GroupedDesign& d, const sigmaridge::RegVector& lambda) {
  const auto n = d.n();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix x(n - 1, d.p());
    Vector y(n - 1);
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i) continue;
      x.row(r) = d.X.row(k);
      y(r) = d.Y(k);
      ++r;
    }
    // The fold's objective keeps the full-sample penalty weight n * Lambda.
    GroupedDesign fold(std::move(x), std::move(y), d.layout);
    Vector scaled = lambda.values() * static_cast<double>(n) / static_cast<double>(n - 1);
    const Vector w = ridge_by_qr(fold, sigmaridge::RegVector(scaled));
    const double e = d.Y(i) - d.X.row(i).dot(w);
    total += e * e;
  }
  return total / static_cast<double>(n);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testing_support
