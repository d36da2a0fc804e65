#include <doctest.h>

#include "sigmaridge/rmt_risk.hpp"
#include "support.hpp"

using namespace sigmaridge;
using namespace testing_support;

namespace {

SpectralDist random_spectrum(std::mt19937_64& rng) {
  switch (uniform_int(rng, 0, 2)) {
    case 0:
      return SpectralDist::point_mass(uniform_real(rng, 0.3, 3.0));
    case 1:
      return SpectralDist::exponential(uniform_real(rng, 0.5, 2.0), 400);
    default: {
      const auto m = static_cast<Eigen::Index>(uniform_int(rng, 2, 6));
      Vector atoms(m), masses(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        atoms(k) = uniform_real(rng, 0.2, 4.0);
        masses(k) = uniform_real(rng, 0.1, 1.0);
      }
      masses /= masses.sum();
      return SpectralDist(atoms, masses);
    }
  }
}

RiskSpec random_spec(std::mt19937_64& rng, bool equal_spectra = false) {
  const std::size_t k = uniform_int(rng, 1, 4);
  std::vector<double> gammas(k), alpha(k);
  std::vector<SpectralDist> spectra;
  const SpectralDist shared = random_spectrum(rng);
  for (std::size_t g = 0; g < k; ++g) {
    gammas[g] = uniform_real(rng, 0.05, 1.5);
    alpha[g] = uniform_real(rng, 0.0, 5.0);
    spectra.push_back(equal_spectra ? shared : random_spectrum(rng));
  }
  return RiskSpec(gammas, alpha, spectra, uniform_real(rng, 0.5, 2.0));
}

// Right-hand side of the fixed-point equation, evaluated directly.
double fixed_point_rhs(const RiskSpec& spec, const RegVector& lambda, double f) {
  const double gamma = spec.gamma();
  double total = 0.0;
  for (std::size_t g = 0; g < spec.num_groups(); ++g) {
    if (lambda.is_dropped(g)) continue;
    const auto& h = spec.spectra[g];
    double integral = 0.0;
    for (Eigen::Index k = 0; k < h.atoms().size(); ++k) {
      integral += h.masses()(k) / (lambda[g] / h.atoms()(k) + 1.0 / (1.0 + gamma * f));
    }
    total += spec.gammas[g] / gamma * integral;
  }
  return total;
}

double closed_form_u(double gamma, double lambda) {
  const double b = lambda + gamma - 1.0;
  const double r = std::sqrt(b * b + 4.0 * lambda);
  return b <= 0.0 ? (r - b) / 2.0 : 4.0 * lambda / (2.0 * (r + b));
}

double closed_form_risk(double gamma, double alpha_total, double lambda) {
  const double u = closed_form_u(gamma, lambda);
  return 1.0 / u - (gamma * lambda - alpha_total * lambda * lambda) / ((lambda + u) * (lambda + u) - gamma * u * u);
}

double closed_form_optimal(double gamma, double l) {
  return (gamma + l - 1.0 + std::sqrt((gamma + l - 1.0) * (gamma + l - 1.0) + 4.0 * l)) / (2.0 * l);
}

}  // namespace

TEST_SUITE("rmt_risk") {

TEST_CASE("spectral distributions") {
  CHECK_THROWS_AS(SpectralDist(Vector::Constant(2, 1.0), Vector::Constant(2, 0.3)), ValidationError);
  CHECK_THROWS_AS(SpectralDist(Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)), ValidationError);
  const SpectralDist e = SpectralDist::exponential(2.0, 2000);
  CHECK(e.atoms().size() == 2000);
  CHECK(e.mean() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.atoms().array().square().matrix().dot(e.masses()) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.atoms().minCoeff() < 1e-12);
  CHECK_THROWS_AS(SpectralDist::exponential(1.0, 100), ValidationError);
  const Vector ev = e.eigenvalues(10);
  CHECK(ev.size() == 10);
  CHECK(ev(0) == doctest::Approx(-std::log1p(-0.05) / 2.0));
  Vector atoms(2), masses(2);
  atoms << 1.0, 4.0;
  masses << 0.25, 0.75;
  const Vector split = SpectralDist(atoms, masses).eigenvalues(8);
  CHECK((split.head(2).array() == 1.0).all());
  CHECK((split.tail(6).array() == 4.0).all());
}

TEST_CASE("identity closed form, worked example") {
  const auto spec = RiskSpec::identity({1.0}, {1.0});
  const FixedPointSolution s = solve_fixed_point(spec, RegVector{1.0});
  CHECK(s.u == doctest::Approx(0.6180339887498949).epsilon(1e-12));
  CHECK(s.f == doctest::Approx(0.6180339887498949).epsilon(1e-12));
  CHECK(identity_single_lambda_u(1.0, 1.0) == doctest::Approx(0.6180339887498949).epsilon(1e-14));
}

TEST_CASE("identity closed form over a grid") {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = uniform_int(rng, 1, 3);
    std::vector<double> gammas(k), alpha(k);
    for (std::size_t g = 0; g < k; ++g) {
      gammas[g] = uniform_real(rng, 0.05, 2.0);
      alpha[g] = uniform_real(rng, 0.0, 4.0);
    }
    const auto spec = RiskSpec::identity(gammas, alpha);
    const double gamma = spec.gamma();
    double total = 0.0;
    for (double a : alpha) total += a;
    for (double l : {1e-3, 0.05, 0.5, 2.0, 40.0}) {
      const FixedPointSolution s = solve_fixed_point(spec, RegVector::uniform(k, l));
      CHECK(rel_err(s.u, closed_form_u(gamma, l)) <= 1e-10);
      CHECK(rel_err(s.f, (1.0 / closed_form_u(gamma, l) - 1.0) / gamma) <= 1e-9);
      const double expected = closed_form_risk(gamma, total, l);
      CHECK(rel_err(asymptotic_risk(spec, RegVector::uniform(k, l)), expected) <= 1e-10);
      CHECK(rel_err(identity_single_lambda_risk(gamma, total, l), expected) <= 1e-12);
    }
  }
}

TEST_CASE("residual, range of u, and the two solvers agree") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 100; ++rep) {
    const RiskSpec spec = random_spec(rng);
    const RegVector lambda = random_lambda(rng, spec.num_groups(), 1e-3, 1e2);
    const FixedPointSolution it = solve_fixed_point(spec, lambda, FixedPointMethod::iteration);
    const FixedPointSolution bi = solve_fixed_point(spec, lambda, FixedPointMethod::bisection);
    const FixedPointSolution au = solve_fixed_point(spec, lambda);
    CHECK(std::abs(it.f - bi.f) <= 1e-11 * std::max(1.0, it.f));
    CHECK(au.f == doctest::Approx(it.f).epsilon(1e-11));
    CHECK(it.method_used == FixedPointMethod::iteration);
    CHECK(bi.method_used == FixedPointMethod::bisection);
    for (const auto* s : {&it, &bi}) {
      CHECK(std::abs(s->f - fixed_point_rhs(spec, lambda, s->f)) <= 1e-12 * std::max(1.0, s->f));
      CHECK(s->u > 0.0);
      CHECK(s->u <= 1.0);
      CHECK(s->f >= 0.0);
    }
  }
}

TEST_CASE("derivative matches central differences") {
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    const RiskSpec spec = random_spec(rng);
    const RegVector lambda = random_lambda(rng, spec.num_groups(), 1e-2, 1e1);
    const FixedPointSolution s = solve_fixed_point(spec, lambda);
    for (std::size_t j = 0; j < spec.num_groups(); ++j) {
      const double h = 1e-5 * lambda[j];
      Vector up = lambda.values(), down = lambda.values();
      up(static_cast<Eigen::Index>(j)) += h;
      down(static_cast<Eigen::Index>(j)) -= h;
      const double fd = (solve_fixed_point(spec, RegVector(up)).f - solve_fixed_point(spec, RegVector(down)).f) / (2.0 * h);
      const double g = s.grad_f(static_cast<Eigen::Index>(j));
      CHECK(g <= 0.0);
      CHECK(std::abs(g - fd) <= 1e-5 * std::max(std::abs(g), 1e-8));
    }
  }
}

TEST_CASE("very large penalties") {
  std::mt19937_64 rng(54);
  for (int rep = 0; rep < 20; ++rep) {
    const RiskSpec spec = random_spec(rng);
    const FixedPointSolution s = solve_fixed_point(spec, RegVector::uniform(spec.num_groups(), 1e8));
    CHECK(s.u == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.f < 1e-6);
  }
  const auto null = RiskSpec::identity({0.5, 1.5}, {0.0, 0.0});
  CHECK(asymptotic_risk(null, RegVector::uniform(2, 1e8)) == doctest::Approx(1.0).epsilon(1e-7));
  const FixedPointSolution all = solve_fixed_point(null, RegVector::uniform(2, kInf));
  CHECK(all.u == 1.0);
  CHECK(all.f == 0.0);
}

TEST_CASE("dropped groups match the limit of large penalties") {
  std::mt19937_64 rng(55);
  for (int rep = 0; rep < 30; ++rep) {
    RiskSpec spec = random_spec(rng);
    if (spec.num_groups() < 2) continue;
    Vector lv = random_lambda(rng, spec.num_groups(), 1e-2, 1e1).values();
    Vector big = lv;
    lv(0) = kInf;
    big(0) = 1e9;
    CHECK(rel_err(asymptotic_risk(spec, RegVector(lv)), asymptotic_risk(spec, RegVector(big))) <= 1e-6);
    CHECK(rel_err(solve_fixed_point(spec, RegVector(lv)).f, solve_fixed_point(spec, RegVector(big)).f) <= 1e-6);
  }
}

TEST_CASE("optimal penalties cancel the derivative terms and bound the risk") {
  std::mt19937_64 rng(56);
  for (int rep = 0; rep < 100; ++rep) {
    const RiskSpec spec = random_spec(rng);
    const RegVector opt = optimal_lambda(spec);
    for (std::size_t g = 0; g < spec.num_groups(); ++g) {
      if (spec.alpha_sq[g] > 0.0) CHECK(opt[g] == doctest::Approx(spec.gammas[g] * spec.sigma_sq / spec.alpha_sq[g]));
      else CHECK(opt.is_dropped(g));
    }
    const double risk = asymptotic_risk(spec, opt);
    const FixedPointSolution s = solve_fixed_point(spec, opt);
    CHECK(std::abs(risk - spec.sigma_sq * (1.0 + spec.gamma() * s.f)) <= 1e-9 * risk);
    CHECK(risk >= spec.sigma_sq * (1.0 - 1e-12));
    // Any other penalty vector is no better.
    const RegVector other = random_lambda(rng, spec.num_groups(), 1e-3, 1e2);
    CHECK(asymptotic_risk(spec, other) >= risk * (1.0 - 1e-10));
    CHECK(asymptotic_risk(spec, other) >= spec.sigma_sq * (1.0 - 1e-12));
  }
}

TEST_CASE("noise scaling") {
  const auto unit = RiskSpec::identity({0.6, 0.9}, {0.5, 2.0}, 1.0);
  const auto scaled = RiskSpec::identity({0.6, 0.9}, {2.0, 8.0}, 4.0);
  const RegVector l{0.3, 1.7};
  CHECK(asymptotic_risk(scaled, l) == doctest::Approx(4.0 * asymptotic_risk(unit, l)).epsilon(1e-12));
}

TEST_CASE("optimal single penalty") {
  const auto spec = RiskSpec::identity({0.5, 0.75}, {1.0, 4.0});
  CHECK(optimal_single_lambda(spec) == doctest::Approx(0.25));
  CHECK(optimal_single_lambda(RiskSpec::identity({0.8}, {2.0})) == doctest::Approx(0.4));
  CHECK(std::isinf(optimal_single_lambda(RiskSpec::identity({0.8}, {0.0}))));
  std::mt19937_64 rng(57);
  for (int rep = 0; rep < 50; ++rep) {
    RiskSpec s = random_spec(rng, true);
    if (s.alpha_sq[0] == 0.0) s.alpha_sq[0] = 1.0;
    const std::size_t k = s.num_groups();
    const double l = optimal_single_lambda(s);
    const double at = asymptotic_risk(s, RegVector::uniform(k, l));
    CHECK(asymptotic_risk(s, RegVector::uniform(k, 1.1 * l)) >= at);
    CHECK(asymptotic_risk(s, RegVector::uniform(k, 0.9 * l)) >= at);
    CHECK(optimal_common_lambda(s) == doctest::Approx(l).epsilon(1e-12));
  }
  Vector atoms(2), masses(2);
  atoms << 1.0, 2.0;
  masses << 0.5, 0.5;
  const RiskSpec unequal({0.5, 0.5}, {1.0, 1.0}, {SpectralDist::identity(), SpectralDist(atoms, masses)});
  CHECK_THROWS_AS(optimal_single_lambda(unequal), ValidationError);
}

TEST_CASE("numeric common penalty on unequal spectra is a local minimum") {
  std::mt19937_64 rng(58);
  for (int rep = 0; rep < 20; ++rep) {
    RiskSpec s = random_spec(rng);
    s.alpha_sq[0] += 0.5;
    const std::size_t k = s.num_groups();
    const double l = optimal_common_lambda(s);
    const double at = asymptotic_risk(s, RegVector::uniform(k, l));
    for (double f : {0.98, 1.02, 0.5, 2.0}) {
      CHECK(asymptotic_risk(s, RegVector::uniform(k, f * l)) >= at * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("first-group strategy") {
  std::mt19937_64 rng(59);
  for (int rep = 0; rep < 30; ++rep) {
    RiskSpec s = random_spec(rng);
    s.alpha_sq[0] += 0.5;
    const RegVector l = optimal_first_group_lambda(s);
    for (std::size_t g = 1; g < s.num_groups(); ++g) CHECK(l.is_dropped(g));
    const double at = asymptotic_risk(s, l);
    for (double f : {0.9, 1.1}) {
      Vector moved = l.values();
      moved(0) *= f;
      CHECK(asymptotic_risk(s, RegVector(moved)) >= at * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("two analysts against the general evaluator") {
  std::mt19937_64 rng(60);
  for (int rep = 0; rep < 100; ++rep) {
    const double g1 = uniform_real(rng, 0.05, 2.0), g2 = uniform_real(rng, 0.05, 2.0);
    const double a1 = uniform_real(rng, 0.1, 5.0), a2 = uniform_real(rng, 0.0, 5.0);
    const TwoAnalystRisks r = two_analyst_risks(g1, g2, a1, a2);
    const double lt = g1 * (a2 + 1.0) / a1;
    CHECK(r.lambda_first_group == doctest::Approx(lt).epsilon(1e-14));
    CHECK(r.risk_first_group == doctest::Approx((a2 + 1.0) * closed_form_optimal(g1, lt)).epsilon(1e-13));
    CHECK(r.lambda_both_groups == doctest::Approx((g1 + g2) / (a1 + a2)).epsilon(1e-14));
    CHECK(r.risk_both_groups == doctest::Approx(closed_form_optimal(g1 + g2, r.lambda_both_groups)).epsilon(1e-13));
    const auto spec = RiskSpec::identity({g1, g2}, {a1, a2});
    CHECK(rel_err(asymptotic_risk(spec, RegVector{lt, kInf}), r.risk_first_group) <= 1e-9);
    CHECK(rel_err(asymptotic_risk(spec, RegVector::uniform(2, r.lambda_both_groups)), r.risk_both_groups) <= 1e-9);
    CHECK(rel_err(identity_optimal_single_risk(g1 + g2, r.lambda_both_groups), r.risk_both_groups) <= 1e-14);
  }
}

TEST_CASE("second group helps above the signal threshold") {
  // gamma < 1, strong first group: threshold at gamma_2 / (1 - gamma).
  const double g1 = 0.3, g2 = 0.2, a1 = 1e8;
  const double threshold = g2 / (1.0 - g1 - g2);
  const TwoAnalystRisks above = two_analyst_risks(g1, g2, a1, 1.05 * threshold);
  CHECK(above.risk_both_groups < above.risk_first_group);
  const TwoAnalystRisks below = two_analyst_risks(g1, g2, a1, 0.95 * threshold);
  CHECK(below.risk_both_groups > below.risk_first_group);
  // gamma > 1: adding the group always hurts for a strong first group.
  for (double a2 : {0.1, 1.0, 10.0}) {
    const TwoAnalystRisks r = two_analyst_risks(0.5, 1.0, a1, a2);
    CHECK(r.risk_both_groups > r.risk_first_group);
  }
}

TEST_CASE("pure-noise second group drives the shared risk to the null risk") {
  const double a1 = 2.0;
  const TwoAnalystRisks r = two_analyst_risks(0.5, 1e6, a1, 0.0);
  CHECK(r.risk_both_groups == doctest::Approx(1.0 + a1).epsilon(1e-5));
}

TEST_CASE("exponential discretization is stable under doubling") {
  for (double rate : {0.5, 1.0, 2.0}) {
    const RiskSpec a({0.4, 0.9}, {1.0, 2.0}, {SpectralDist::exponential(rate, 2000), SpectralDist::identity()});
    const RiskSpec b({0.4, 0.9}, {1.0, 2.0}, {SpectralDist::exponential(rate, 4000), SpectralDist::identity()});
    const RegVector l{0.5, 0.8};
    CHECK(std::abs(solve_fixed_point(a, l).f - solve_fixed_point(b, l).f) < 1e-8);
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(RiskSpec::identity({}, {}), ValidationError);
  CHECK_THROWS_AS(RiskSpec::identity({0.5}, {-1.0}), ValidationError);
  CHECK_THROWS_AS(RiskSpec::identity({0.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(RiskSpec::identity({0.5}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(RiskSpec::identity({0.5}, {1.0}, 0.0), ValidationError);
  CHECK(RiskSpec::identity({0.5, 0.25}, {1.0, 1.0}).gamma() == 0.75);
}

}
