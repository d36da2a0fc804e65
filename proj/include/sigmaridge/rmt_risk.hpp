#pragma once

#include <optional>
#include <vector>

#include "sigmaridge/core.hpp"

namespace sigmaridge {

/// Discrete spectral distribution: atoms t_k > 0 with masses summing to 1.
class SpectralDist {
 public:
  SpectralDist(Vector atoms, Vector masses);

  static SpectralDist point_mass(double t);
  static SpectralDist identity() { return point_mass(1.0); }
  /// Exp(rate) law by composite 8-point Gauss-Legendre on about m atoms:
  /// geometric panels toward 0, uniform panels on [1, 40] in rate * t.
  static SpectralDist exponential(double rate, std::size_t m = 2000);

  const Vector& atoms() const noexcept { return atoms_; }
  const Vector& masses() const noexcept { return masses_; }
  double mean() const;

  /// `count` eigenvalues whose empirical distribution tracks this one. The
  /// exponential law gives midpoint quantiles; atom lists are split by mass.
  Vector eigenvalues(std::size_t count) const;

  bool operator==(const SpectralDist& other) const;

 private:
  Vector atoms_;
  Vector masses_;
  std::optional<double> exponential_rate_;
};

struct RiskSpec {
  std::vector<double> gammas;    // p_g / n
  std::vector<double> alpha_sq;  // signal strength per group
  std::vector<SpectralDist> spectra;
  double sigma_sq = 1.0;

  RiskSpec(std::vector<double> gammas, std::vector<double> alpha_sq, std::vector<SpectralDist> spectra,
           double sigma_sq = 1.0);
  /// Identity covariance in every group.
  static RiskSpec identity(std::vector<double> gammas, std::vector<double> alpha_sq, double sigma_sq = 1.0);

  std::size_t num_groups() const noexcept { return gammas.size(); }
  double gamma() const;
  bool equal_spectra() const;
};

enum class FixedPointMethod { automatic, iteration, bisection };

/// Root of f = sum_j (gamma_j/gamma) int (lambda_j/t + 1/(1 + gamma f))^-1 dH_j.
struct FixedPointSolution {
  double f = 0.0;
  double u = 1.0;  // 1 / (1 + gamma f)
  Vector grad_f;   // d f / d lambda_j; 0 for dropped groups
  double residual = 0.0;
  std::size_t iterations = 0;
  FixedPointMethod method_used = FixedPointMethod::iteration;
};

/// Groups with lambda_g = inf contribute nothing to the equation.
FixedPointSolution solve_fixed_point(const RiskSpec& spec, const RegVector& lambda,
                                     FixedPointMethod method = FixedPointMethod::automatic);

/// Limiting out-of-sample risk of group ridge at `lambda`, including noise.
double asymptotic_risk(const RiskSpec& spec, const RegVector& lambda);

/// lambda_g = gamma_g sigma^2 / alpha_g^2 (inf when alpha_g = 0).
RegVector optimal_lambda(const RiskSpec& spec);

/// gamma sigma^2 / sum alpha_g^2. Requires equal spectra; inf for zero signal.
double optimal_single_lambda(const RiskSpec& spec);

/// Best shared penalty. Closed form for equal spectra, numeric search otherwise.
double optimal_common_lambda(const RiskSpec& spec);

/// Best (lambda, inf, ..., inf): the other groups act as extra noise.
RegVector optimal_first_group_lambda(const RiskSpec& spec);

/// Identity covariance, shared lambda: closed-form u and risk (sigma^2 = 1).
double identity_single_lambda_u(double gamma, double lambda);
double identity_single_lambda_risk(double gamma, double alpha_sq_total, double lambda);
/// (gamma + l - 1 + sqrt((gamma + l - 1)^2 + 4l)) / (2l).
double identity_optimal_single_risk(double gamma, double lambda_star);

struct TwoAnalystRisks {
  double risk_first_group = 0.0;
  double lambda_first_group = 0.0;
  double risk_both_groups = 0.0;
  double lambda_both_groups = 0.0;
};

/// Identity covariance, K = 2: optimally tuned ridge on group 1 alone versus
/// single-penalty ridge on both groups.
TwoAnalystRisks two_analyst_risks(double gamma1, double gamma2, double alpha1_sq, double alpha2_sq);

}  // namespace sigmaridge
