#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigmaridge/core.hpp"
#include "sigmaridge/rmt_risk.hpp"

namespace sigmaridge {

/// Draw law for coefficients and noise; both have mean 0 and variance 1.
enum class Law { gaussian, rademacher };

struct Covariance {
  enum class Kind { identity, ar1, block_spectral };
  Kind kind = Kind::identity;
  double rho = 0.0;
  /// One spectrum per group; each block is diagonal with these eigenvalues.
  std::vector<SpectralDist> spectra;

  static Covariance identity() { return {}; }
  static Covariance ar1(double rho);
  static Covariance block_spectral(std::vector<SpectralDist> spectra);
};

/// Random-effects model: w_j ~ (alpha_g / sqrt(p_g)) * law, Y = Xw + sigma * law.
struct SimConfig {
  std::size_t n = 0;
  std::size_t n_test = 0;
  GroupLayout layout;
  std::vector<double> alphas;
  double sigma = 1.0;
  Covariance covariance;
  Law coef_law = Law::gaussian;
  Law noise_law = Law::gaussian;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimData {
  GroupedDesign train;
  GroupedDesign test;
  Vector w_true;
};

/// splitmix64 of base + stream * golden gamma. Streams used by generate:
/// 0 coefficients, 1 train features, 2 train noise, 3 test features, 4 test noise.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

SimData generate(const SimConfig& config);

/// Merges consecutive runs of K / target_k groups.
GroupLayout coarsen_groups(const GroupLayout& layout, std::size_t target_k);

/// alpha_g = top * (g - 1) / (K - 1).
std::vector<double> linear_alphas(std::size_t num_groups, double top = 10.0);

/// Bayes penalties p_g sigma^2 / (n alpha_g^2), inf when alpha_g = 0.
RegVector bayes_lambda(const SimConfig& config);

enum class Method { sigma_ridge, single_ridge, multi_ridge, group_lasso, bayes_oracle };

std::string method_name(Method method);
std::optional<Method> parse_method(const std::string& name);

struct MethodSummary {
  Method method = Method::sigma_ridge;
  std::vector<double> mse;  // per replicate; NaN where the method failed
  std::vector<std::string> failures;
  double mean = 0.0;
  double se = 0.0;
  std::size_t completed = 0;
  double seconds = 0.0;  // fitting time summed over replicates
};

struct ComparisonOptions {
  /// Group count the data-driven grouped methods see; the oracle keeps the truth.
  std::optional<std::size_t> coarse_k;
  double holdout_fraction = 0.3;
  std::size_t multi_ridge_points = 5000;
};

struct ComparisonTable {
  std::vector<MethodSummary> rows;
  std::size_t n_reps = 0;
  std::size_t k_coarse = 0;
};

/// Replicate r uses seed derive_seed(config.seed, r); methods see the same data.
ComparisonTable run_comparison(const SimConfig& config, const std::vector<Method>& methods, std::size_t n_reps,
                               const ComparisonOptions& options = {});

/// Coefficients of `method` fit on `train`; `seed` drives method-internal randomness.
Vector fit_method(Method method, const GroupedDesign& train, std::uint64_t seed, const ComparisonOptions& options,
                  const std::optional<RegVector>& oracle_lambda = std::nullopt);

/// Desk-scale heterogeneous design: p = 200, K = 8, p_g = 25, sigma = 5, alphas
/// 0..10, 10000 test rows. `full_scale` uses p = 800, K = 32.
SimConfig heterogeneous_config(bool full_scale, Covariance covariance, double n_over_p, std::uint64_t seed);

enum class Strategy { optimal_vector, optimal_common, first_group };
std::string strategy_name(Strategy strategy);

struct TheoryRow {
  Strategy strategy = Strategy::optimal_vector;
  RegVector lambda;
  double theoretical = 0.0;
  /// sigma^2 + mean over test rows of (x'(w_hat - w))^2.
  double empirical = 0.0;
  /// Mean squared prediction error on the noisy test responses.
  double test_mse = 0.0;
  /// sigma^2 + (w_hat - w)' Sigma (w_hat - w).
  double exact = 0.0;
};

/// Simulates the block-diagonal model implied by `spec` at sample size n
/// (p_g = round(gamma_g n)) and compares finite-sample conditional risk with
/// the limit. Theory is evaluated at the realized gamma_g = p_g / n.
std::vector<TheoryRow> empirical_vs_theoretical(const RiskSpec& spec, std::size_t n, std::size_t n_test,
                                                std::uint64_t seed,
                                                const std::vector<Strategy>& strategies = {Strategy::optimal_vector,
                                                                                           Strategy::optimal_common,
                                                                                           Strategy::first_group},
                                                Law coef_law = Law::gaussian, Law noise_law = Law::gaussian);

/// RiskSpec with gamma_g = p_g / n for the realized group sizes.
RiskSpec realized_spec(const RiskSpec& spec, std::size_t n);

}  // namespace sigmaridge
