#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "sigmaridge/nnls.hpp"
#include "support.hpp"

using namespace sigmaridge;
using namespace testing_support;

namespace {

// Exhaustive search over supports: least squares on each subset, keep the
// feasible one with the smallest residual.
double subset_oracle(const Matrix& a, const Vector& b) {
  const auto k = a.cols();
  double best = b.norm();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < k; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Matrix sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    const Vector x = sub.completeOrthogonalDecomposition().solve(b);
    if ((x.array() >= 0.0).all()) best = std::min(best, (sub * x - b).norm());
  }
  return best;
}

void check_kkt(const Matrix& a, const Vector& b, const NnlsSolution& s) {
  const Vector grad = a.transpose() * (a * s.d - b);
  const double scale = 1e-9 * (1.0 + a.norm() * (b.norm() + a.norm() * s.d.norm()));
  for (Eigen::Index g = 0; g < s.d.size(); ++g) {
    CHECK(s.d(g) >= 0.0);
    if (s.d(g) > 0.0) CHECK(std::abs(grad(g)) <= scale);
    else CHECK(grad(g) >= -scale);
  }
}

}  // namespace

TEST_SUITE("nnls") {

TEST_CASE("KKT conditions and the subset oracle") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const auto k = static_cast<Eigen::Index>(uniform_int(rng, 1, 6));
    const auto m = static_cast<Eigen::Index>(uniform_int(rng, 1, 8));
    const Matrix a = gaussian_matrix(rng, m, k);
    const Vector b = gaussian_vector(rng, m);
    const NnlsSolution s = solve_nnls(a, b);
    check_kkt(a, b, s);
    CHECK(s.residual_norm == doctest::Approx((a * s.d - b).norm()).epsilon(1e-12));
    CHECK(s.residual_norm <= subset_oracle(a, b) * (1.0 + 1e-9) + 1e-12);
    std::vector<std::size_t> expected;
    for (Eigen::Index g = 0; g < k; ++g)
      if (s.d(g) > 0.0) expected.push_back(static_cast<std::size_t>(g));
    CHECK(s.active_set == expected);
  }
}

TEST_CASE("no feasible point beats the solution") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 30; ++rep) {
    const auto k = static_cast<Eigen::Index>(uniform_int(rng, 2, 5));
    const Matrix a = gaussian_matrix(rng, 6, k);
    const Vector b = gaussian_vector(rng, 6);
    const NnlsSolution s = solve_nnls(a, b);
    for (int t = 0; t < 500; ++t) {
      Vector d(k);
      for (Eigen::Index g = 0; g < k; ++g) d(g) = std::max(0.0, 2.0 * std::normal_distribution<>()(rng));
      CHECK(s.residual_norm <= (a * d - b).norm() + 1e-10);
    }
  }
}

TEST_CASE("interior least-squares solution is returned unchanged") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const auto k = static_cast<Eigen::Index>(uniform_int(rng, 1, 5));
    const Matrix a = gaussian_matrix(rng, k + 3, k);
    Vector d0(k);
    for (Eigen::Index g = 0; g < k; ++g) d0(g) = uniform_real(rng, 0.5, 2.0);
    const Vector b = a * d0;
    const NnlsSolution s = solve_nnls(a, b);
    CHECK(rel_err(s.d, d0) < 1e-10);
    CHECK(s.active_set.size() == static_cast<std::size_t>(k));
    CHECK_FALSE(s.rank_deficient);
  }
}

TEST_CASE("nonpositive target for a nonnegative system gives zero") {
  std::mt19937_64 rng(24);
  const Matrix a = gaussian_matrix(rng, 4, 3).cwiseAbs();
  Vector b(4);
  b << -1.0, 0.0, -0.5, -2.0;
  const NnlsSolution s = solve_nnls(a, b);
  CHECK(s.d.isZero(0.0));
  CHECK(s.active_set.empty());
}

TEST_CASE("column permutation permutes the solution") {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 50; ++rep) {
    const auto k = static_cast<Eigen::Index>(uniform_int(rng, 2, 6));
    const Matrix a = gaussian_matrix(rng, 8, k);
    const Vector b = gaussian_vector(rng, 8);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix ap(8, k);
    for (Eigen::Index j = 0; j < k; ++j) ap.col(j) = a.col(perm[static_cast<std::size_t>(j)]);
    const NnlsSolution s = solve_nnls(a, b);
    const NnlsSolution sp = solve_nnls(ap, b);
    for (Eigen::Index j = 0; j < k; ++j) {
      CHECK(sp.d(j) == doctest::Approx(s.d(perm[static_cast<std::size_t>(j)])).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("rank-deficient systems are flagged and still optimal") {
  std::mt19937_64 rng(26);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix a = gaussian_matrix(rng, 5, 4);
    a.col(3) = a.col(0) + a.col(1);
    Vector b = a.col(0) * 1.5 + a.col(1) * 0.7 + 0.1 * gaussian_vector(rng, 5);
    const NnlsSolution s = solve_nnls(a, b);
    check_kkt(a, b, s);
    CHECK(s.residual_norm <= subset_oracle(a, b) * (1.0 + 1e-9) + 1e-12);
    CHECK(s.rank_deficient);
  }
  // Fewer rows than columns.
  const Matrix wide = gaussian_matrix(rng, 2, 4);
  CHECK(solve_nnls(wide, gaussian_vector(rng, 2)).rank_deficient);
}

TEST_CASE("input validation") {
  Matrix a = Matrix::Identity(2, 2);
  Vector b = Vector::Ones(3);
  CHECK_THROWS_AS(solve_nnls(a, b), ValidationError);
  b = Vector::Ones(2);
  a(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_nnls(a, b), ValidationError);
}

}
