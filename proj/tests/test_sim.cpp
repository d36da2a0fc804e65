#include <doctest.h>

#include "sigmaridge/ridge.hpp"
#include "sigmaridge/sim.hpp"
#include "support.hpp"

using namespace sigmaridge;
using namespace testing_support;

namespace {

SimConfig small_config(std::uint64_t seed) {
  const std::vector<std::size_t> sizes{10, 15, 5};
  SimConfig c;
  c.n = 40;
  c.n_test = 30;
  c.layout = GroupLayout::contiguous(sizes);
  c.alphas = {0.0, 1.0, 3.0};
  c.sigma = 2.0;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("seed streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("generation is deterministic and shaped") {
  const SimData a = generate(small_config(9));
  const SimData b = generate(small_config(9));
  CHECK(a.train.X == b.train.X);
  CHECK(a.train.Y == b.train.Y);
  CHECK(a.test.X == b.test.X);
  CHECK(a.w_true == b.w_true);
  CHECK(a.train.n() == 40);
  CHECK(a.test.n() == 30);
  CHECK(a.train.p() == 30);
  CHECK(a.w_true.head(10).isZero(0.0));
  const SimData c = generate(small_config(10));
  CHECK(c.train.X != a.train.X);
}

TEST_CASE("zero signal gives zero coefficients") {
  SimConfig c = small_config(1);
  c.alphas = {0.0, 0.0, 0.0};
  CHECK(generate(c).w_true.norm() == 0.0);
}

TEST_CASE("coefficient variance per group") {
  // Pooled over 20 seeded draws so the law-of-large-numbers bound is not a coin flip.
  for (std::size_t pg : {25u, 2500u}) {
    const double tol = pg == 25 ? 0.20 : 0.03;
    for (Law law : {Law::gaussian, Law::rademacher}) {
      const std::vector<std::size_t> sizes{pg, pg};
      SimConfig c;
      c.n = 1;
      c.n_test = 1;
      c.layout = GroupLayout::contiguous(sizes);
      c.alphas = {1.0, 3.0};
      c.coef_law = law;
      Vector sum_sq = Vector::Zero(2);
      for (std::uint64_t s = 0; s < 20; ++s) {
        c.seed = s;
        const Vector w = generate(c).w_true;
        sum_sq(0) += w.head(static_cast<Eigen::Index>(pg)).squaredNorm();
        sum_sq(1) += w.tail(static_cast<Eigen::Index>(pg)).squaredNorm();
      }
      const double draws = 20.0 * static_cast<double>(pg);
      for (Eigen::Index g = 0; g < 2; ++g) {
        const double expected = c.alphas[static_cast<std::size_t>(g)] * c.alphas[static_cast<std::size_t>(g)] / static_cast<double>(pg);
        CHECK(std::abs(sum_sq(g) / draws - expected) <= tol * expected);
      }
    }
  }
}

TEST_CASE("AR(1) features") {
  const std::vector<std::size_t> sizes{5, 5};
  SimConfig c;
  c.n = 10000;
  c.n_test = 1;
  c.layout = GroupLayout::contiguous(sizes);
  c.alphas = {1.0, 1.0};
  c.covariance = Covariance::ar1(0.8);
  c.seed = 3;
  const Matrix x = generate(c).train.X;
  for (Eigen::Index j = 0; j + 1 < x.cols(); ++j) {
    const double corr = x.col(j).dot(x.col(j + 1)) / (x.col(j).norm() * x.col(j + 1).norm());
    CHECK(std::abs(corr - 0.8) <= 0.02);
  }
  // Correlation crosses the group boundary with the lag.
  const double lag2 = x.col(4).dot(x.col(6)) / (x.col(4).norm() * x.col(6).norm());
  CHECK(std::abs(lag2 - 0.64) <= 0.03);
  CHECK_THROWS_AS(Covariance::ar1(1.0), ValidationError);
}

TEST_CASE("block spectral features have the requested variances") {
  const std::vector<std::size_t> sizes{4, 4};
  SimConfig c;
  c.n = 20000;
  c.n_test = 1;
  c.layout = GroupLayout::contiguous(sizes);
  c.alphas = {1.0, 1.0};
  c.covariance = Covariance::block_spectral({SpectralDist::point_mass(4.0), SpectralDist::identity()});
  c.seed = 4;
  const Matrix x = generate(c).train.X;
  for (Eigen::Index j = 0; j < 8; ++j) {
    CHECK(x.col(j).squaredNorm() / 20000.0 == doctest::Approx(j < 4 ? 4.0 : 1.0).epsilon(0.05));
  }
}

TEST_CASE("coarsening") {
  const std::vector<std::size_t> s32(32, 25);
  const GroupLayout l32 = GroupLayout::contiguous(s32);
  const GroupLayout two = coarsen_groups(l32, 2);
  CHECK(two.sizes() == std::vector<std::size_t>{400, 400});
  CHECK(coarsen_groups(l32, 32) == l32);
  const std::vector<std::size_t> s4{1, 2, 3, 4};
  const GroupLayout pairs = coarsen_groups(GroupLayout::contiguous(s4), 2);
  CHECK(pairs.sizes() == std::vector<std::size_t>{3, 7});
  CHECK(pairs.group_of(2) == 0);
  CHECK(pairs.group_of(3) == 1);
  CHECK_THROWS_AS(coarsen_groups(l32, 5), ValidationError);
}

TEST_CASE("linear alphas and Bayes penalties") {
  const auto a = linear_alphas(8);
  CHECK(a.front() == 0.0);
  CHECK(a.back() == doctest::Approx(10.0));
  CHECK(a[1] == doctest::Approx(10.0 / 7.0));
  CHECK(linear_alphas(32)[31] == doctest::Approx(10.0));
  const SimConfig c = small_config(0);
  const RegVector l = bayes_lambda(c);
  CHECK(l.is_dropped(0));
  CHECK(l[1] == doctest::Approx(15.0 * 4.0 / (40.0 * 1.0)));
  CHECK(l[2] == doctest::Approx(5.0 * 4.0 / (40.0 * 9.0)));
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::sigma_ridge, Method::single_ridge, Method::multi_ridge, Method::group_lasso, Method::bayes_oracle}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_FALSE(parse_method("lasso").has_value());
}

TEST_CASE("first-group strategy equals a fit on the first group alone") {
  const auto spec = RiskSpec::identity({0.25, 0.25}, {2.0, 0.5});
  const RiskSpec real = realized_spec(spec, 200);
  const RegVector l = optimal_first_group_lambda(real);
  const std::vector<std::size_t> sizes{50, 50};
  SimConfig c;
  c.n = 200;
  c.n_test = 1;
  c.layout = GroupLayout::contiguous(sizes);
  c.alphas = {std::sqrt(2.0), std::sqrt(0.5)};
  c.seed = 5;
  const SimData d = generate(c);
  const Vector both = ridge_coefficients(d.train, l);
  const std::vector<std::size_t> one{50};
  const GroupedDesign first(d.train.X.leftCols(50), d.train.Y, GroupLayout::contiguous(one));
  const Vector alone = ridge_coefficients(first, RegVector{l[0]});
  CHECK((both.head(50) - alone).cwiseAbs().maxCoeff() <= 1e-12 * alone.cwiseAbs().maxCoeff());
  CHECK(both.tail(50).isZero(0.0));
  const auto rows = empirical_vs_theoretical(spec, 200, 100, 5, {Strategy::first_group});
  CHECK(rows.at(0).theoretical == doctest::Approx(asymptotic_risk(real, l)).epsilon(1e-14));
}

TEST_CASE("finite-sample risk tracks the limit") {
  const auto spec = RiskSpec::identity({0.25, 0.25}, {2.0, 0.0});
  const auto rows = empirical_vs_theoretical(spec, 1000, 20000, 11);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(std::abs(r.empirical / r.theoretical - 1.0) <= 0.03);
    CHECK(std::abs(r.exact / r.theoretical - 1.0) <= 0.03);
    CHECK(r.test_mse > 0.0);
  }
}

TEST_CASE("universality: Rademacher draws agree with the limit too") {
  const auto spec = RiskSpec::identity({0.3, 0.2}, {1.5, 1.0}, 1.0);
  const auto rows = empirical_vs_theoretical(spec, 1000, 20000, 12, {Strategy::optimal_vector, Strategy::optimal_common,
                                                                     Strategy::first_group},
                                             Law::rademacher, Law::rademacher);
  for (const auto& r : rows) CHECK(std::abs(r.empirical / r.theoretical - 1.0) <= 0.03);
}

TEST_CASE("comparison harness") {
  SimConfig c = small_config(21);
  c.n_test = 200;
  const std::vector<Method> methods{Method::sigma_ridge, Method::single_ridge, Method::bayes_oracle};
  const ComparisonTable a = run_comparison(c, methods, 6);
  const ComparisonTable b = run_comparison(c, methods, 6);
  REQUIRE(a.rows.size() == 3);
  CHECK(a.n_reps == 6);
  CHECK(a.k_coarse == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.rows[m].completed == 6);
    for (std::size_t r = 0; r < 6; ++r) CHECK(a.rows[m].mse[r] == b.rows[m].mse[r]);
    CHECK(a.rows[m].se >= 0.0);
  }
  // Replicate 0 is reproducible by hand.
  SimConfig rep = c;
  rep.seed = derive_seed(c.seed, 0);
  const SimData d = generate(rep);
  const Vector coef = fit_method(Method::bayes_oracle, d.train, derive_seed(rep.seed, 5), {}, bayes_lambda(rep));
  CHECK(a.rows[2].mse[0] == doctest::Approx((d.test.Y - d.test.X * coef).squaredNorm() / 200.0).epsilon(1e-12));
}

TEST_CASE("a failing method leaves a missing cell") {
  SimConfig c = small_config(22);
  c.alphas = {0.0, 0.0, 0.0};
  c.sigma = 0.0;  // Y = 0: data-driven tuning has no scale to work from.
  const ComparisonTable t = run_comparison(c, {Method::single_ridge}, 3);
  CHECK(t.rows[0].completed == 0);
  CHECK(t.rows[0].failures.size() == 3);
  CHECK(std::isnan(t.rows[0].mean));
}

TEST_CASE("coarse layouts reach the grouped methods only") {
  const SimConfig c = heterogeneous_config(false, Covariance::identity(), 1.0, 1);
  CHECK(c.layout.num_groups() == 8);
  CHECK(c.n == 200);
  CHECK(c.sigma == 5.0);
  ComparisonOptions opt;
  opt.coarse_k = 2;
  SimConfig small = c;
  small.n_test = 500;
  const ComparisonTable t = run_comparison(small, {Method::single_ridge, Method::bayes_oracle}, 2, opt);
  CHECK(t.k_coarse == 2);
  const ComparisonTable full = run_comparison(small, {Method::single_ridge, Method::bayes_oracle}, 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(t.rows[0].mse[r] == doctest::Approx(full.rows[0].mse[r]).epsilon(1e-10));
    CHECK(t.rows[1].mse[r] == full.rows[1].mse[r]);
  }
}

TEST_CASE("homogeneous signal: sigma-ridge close to single ridge") {
  // Desk design with every group at the mean signal strength of the linear spread.
  SimConfig c = heterogeneous_config(false, Covariance::identity(), 1.0, 0);
  double mean_sq = 0.0;
  for (double a : c.alphas) mean_sq += a * a / static_cast<double>(c.alphas.size());
  c.alphas.assign(c.alphas.size(), std::sqrt(mean_sq));
  const ComparisonTable t = run_comparison(c, {Method::sigma_ridge, Method::single_ridge}, 50);
  CHECK(t.rows[0].mean <= 1.05 * t.rows[1].mean);
  CHECK(t.rows[0].mean >= 0.95 * t.rows[1].mean);
}

}
