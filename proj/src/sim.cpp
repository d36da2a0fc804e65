#include "sigmaridge/sim.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "sigmaridge/group_lasso.hpp"
#include "sigmaridge/parallel.hpp"
#include "sigmaridge/ridge.hpp"
#include "sigmaridge/sigma_path.hpp"

namespace sigmaridge {

Covariance Covariance::ar1(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw ValidationError("AR(1) rho must be in (-1, 1)");
  Covariance c;
  c.kind = Kind::ar1;
  c.rho = rho;
  return c;
}

Covariance Covariance::block_spectral(std::vector<SpectralDist> spectra) {
  Covariance c;
  c.kind = Kind::block_spectral;
  c.spectra = std::move(spectra);
  return c;
}

void SimConfig::validate() const {
  if (n == 0) throw ValidationError("simulation needs n >= 1");
  if (layout.num_features() == 0) throw ValidationError("simulation needs p >= 1");
  if (alphas.size() != layout.num_groups()) throw ValidationError("need one alpha per group");
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("alpha_g must be finite and >= 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and >= 0");
  if (covariance.kind == Covariance::Kind::ar1 && !(covariance.rho > -1.0 && covariance.rho < 1.0)) {
    throw ValidationError("AR(1) rho must be in (-1, 1)");
  }
  if (covariance.kind == Covariance::Kind::block_spectral && covariance.spectra.size() != layout.num_groups()) {
    throw ValidationError("block covariance needs one spectrum per group");
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

class Drawer {
 public:
  explicit Drawer(std::uint64_t seed) : rng_(seed) {}
  double operator()(Law law) {
    if (law == Law::rademacher) return (rng_() & 1U) ? 1.0 : -1.0;
    return normal_(rng_);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

class FeatureSampler {
 public:
  FeatureSampler(const SimConfig& config, std::uint64_t seed) : config_(config), draw_(seed) {
    if (config.covariance.kind == Covariance::Kind::block_spectral) {
      const auto& layout = config.layout;
      scale_ = Vector(static_cast<Eigen::Index>(layout.num_features()));
      for (std::size_t g = 0; g < layout.num_groups(); ++g) {
        const Vector eig = config.covariance.spectra[g].eigenvalues(layout.size(g));
        const auto& cols = layout.columns(g);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          scale_(static_cast<Eigen::Index>(cols[k])) = std::sqrt(eig(static_cast<Eigen::Index>(k)));
        }
      }
    }
  }

  Matrix rows(std::size_t count) {
    const auto p = static_cast<Eigen::Index>(config_.layout.num_features());
    Matrix x(static_cast<Eigen::Index>(count), p);
    const double rho = config_.covariance.rho;
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const double z = draw_(Law::gaussian);
        switch (config_.covariance.kind) {
          case Covariance::Kind::identity: x(i, j) = z; break;
          case Covariance::Kind::ar1: x(i, j) = j == 0 ? z : rho * x(i, j - 1) + innov * z; break;
          case Covariance::Kind::block_spectral: x(i, j) = scale_(j) * z; break;
        }
      }
    }
    return x;
  }

  // Diagonal of Sigma for the block model; ones otherwise.
  Vector variances() const {
    if (config_.covariance.kind == Covariance::Kind::block_spectral) return scale_.array().square();
    return Vector::Ones(static_cast<Eigen::Index>(config_.layout.num_features()));
  }

 private:
  const SimConfig& config_;
  Drawer draw_;
  Vector scale_;
};

Vector draw_coefficients(const SimConfig& config) {
  Drawer draw(derive_seed(config.seed, 0));
  const auto& layout = config.layout;
  Vector w(static_cast<Eigen::Index>(layout.num_features()));
  for (std::size_t j = 0; j < layout.num_features(); ++j) {
    const std::size_t g = layout.group_of(j);
    w(static_cast<Eigen::Index>(j)) =
        config.alphas[g] / std::sqrt(static_cast<double>(layout.size(g))) * draw(config.coef_law);
  }
  return w;
}

Vector draw_noise(const SimConfig& config, std::size_t count, std::uint64_t seed) {
  Drawer draw(seed);
  Vector e(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = config.sigma * draw(config.noise_law);
  return e;
}

GroupedDesign draw_design(const SimConfig& config, const Vector& w, std::size_t count, std::uint64_t x_stream,
                          std::uint64_t e_stream) {
  FeatureSampler sampler(config, derive_seed(config.seed, x_stream));
  Matrix x = sampler.rows(count);
  Vector y = x * w + draw_noise(config, count, derive_seed(config.seed, e_stream));
  return GroupedDesign(std::move(x), std::move(y), config.layout);
}

}  // namespace

SimData generate(const SimConfig& config) {
  config.validate();
  if (config.n_test == 0) throw ValidationError("simulation needs n_test >= 1");
  SimData out;
  out.w_true = draw_coefficients(config);
  out.train = draw_design(config, out.w_true, config.n, 1, 2);
  out.test = draw_design(config, out.w_true, config.n_test, 3, 4);
  return out;
}

GroupLayout coarsen_groups(const GroupLayout& layout, std::size_t target_k) {
  const std::size_t k = layout.num_groups();
  if (target_k == 0 || k % target_k != 0) {
    throw ValidationError("target group count " + std::to_string(target_k) + " does not divide K = " +
                          std::to_string(k));
  }
  const std::size_t merge = k / target_k;
  std::vector<std::size_t> membership(layout.num_features());
  for (std::size_t j = 0; j < membership.size(); ++j) membership[j] = layout.group_of(j) / merge;
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < target_k; ++g) {
    if (merge == 1) {
      labels.push_back(layout.labels()[g]);
    } else {
      labels.push_back(layout.labels()[g * merge] + "-" + layout.labels()[(g + 1) * merge - 1]);
    }
  }
  return GroupLayout(std::move(membership), std::move(labels));
}

std::vector<double> linear_alphas(std::size_t num_groups, double top) {
  std::vector<double> out(num_groups, 0.0);
  for (std::size_t g = 1; g < num_groups; ++g) {
    out[g] = top * static_cast<double>(g) / static_cast<double>(num_groups - 1);
  }
  return out;
}

RegVector bayes_lambda(const SimConfig& config) {
  const auto& layout = config.layout;
  Vector out(static_cast<Eigen::Index>(layout.num_groups()));
  for (std::size_t g = 0; g < layout.num_groups(); ++g) {
    const double a = config.alphas[g];
    out(static_cast<Eigen::Index>(g)) =
        a > 0.0 ? static_cast<double>(layout.size(g)) * config.sigma * config.sigma / (static_cast<double>(config.n) * a * a)
                : kInf;
  }
  return RegVector(out);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::sigma_ridge: return "sigma-ridge";
    case Method::single_ridge: return "single-ridge";
    case Method::multi_ridge: return "multi-ridge";
    case Method::group_lasso: return "group-lasso";
    case Method::bayes_oracle: return "bayes-oracle";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::sigma_ridge, Method::single_ridge, Method::multi_ridge, Method::group_lasso,
                   Method::bayes_oracle}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

Vector fit_method(Method method, const GroupedDesign& train, std::uint64_t seed, const ComparisonOptions& options,
                  const std::optional<RegVector>& oracle_lambda) {
  const std::size_t k = train.layout.num_groups();
  switch (method) {
    case Method::sigma_ridge: return fit_sigma_ridge(train).fit.coef;
    case Method::single_ridge:
      return ridge_coefficients(train, RegVector::uniform(k, tune_single_lambda(train).lambda_init));
    case Method::multi_ridge:
      return ridge_coefficients(train, tune_multi_lambda(train, seed, options.multi_ridge_points).lambda);
    case Method::group_lasso: return tune_group_lasso(train, options.holdout_fraction, seed).fit.coef;
    case Method::bayes_oracle:
      if (!oracle_lambda) throw ValidationError("the Bayes oracle needs the true penalties");
      return ridge_coefficients(train, *oracle_lambda);
  }
  throw ValidationError("unknown method");
}

ComparisonTable run_comparison(const SimConfig& config, const std::vector<Method>& methods, std::size_t n_reps,
                               const ComparisonOptions& options) {
  config.validate();
  if (n_reps == 0) throw ValidationError("need at least one replicate");
  if (config.n_test == 0) throw ValidationError("simulation needs n_test >= 1");
  const GroupLayout coarse = options.coarse_k ? coarsen_groups(config.layout, *options.coarse_k) : config.layout;

  ComparisonTable table;
  table.n_reps = n_reps;
  table.k_coarse = coarse.num_groups();
  table.rows.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    table.rows[m].method = methods[m];
    table.rows[m].mse.assign(n_reps, std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<std::vector<std::string>> errors(n_reps * methods.size());
  std::vector<double> seconds(n_reps * methods.size(), 0.0);

  parallel_for(n_reps, [&](std::size_t rep) {
    SimConfig rep_config = config;
    rep_config.seed = derive_seed(config.seed, rep);
    const SimData data = generate(rep_config);
    const GroupedDesign coarse_train(data.train.X, data.train.Y, coarse);
    const RegVector oracle = bayes_lambda(rep_config);
    const std::uint64_t method_seed = derive_seed(rep_config.seed, 5);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto start = std::chrono::steady_clock::now();
      try {
        const GroupedDesign& train = methods[m] == Method::bayes_oracle ? data.train : coarse_train;
        const Vector coef = fit_method(methods[m], train, method_seed, options, oracle);
        table.rows[m].mse[rep] = (data.test.Y - data.test.X * coef).squaredNorm() / static_cast<double>(data.test.n());
      } catch (const Error& e) {
        errors[rep * methods.size() + m].push_back("replicate " + std::to_string(rep) + ": " + e.what());
      }
      seconds[rep * methods.size() + m] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  });

  for (std::size_t m = 0; m < methods.size(); ++m) {
    auto& row = table.rows[m];
    for (std::size_t rep = 0; rep < n_reps; ++rep) {
      for (auto& msg : errors[rep * methods.size() + m]) row.failures.push_back(std::move(msg));
      row.seconds += seconds[rep * methods.size() + m];
    }
    double sum = 0.0;
    for (double v : row.mse) {
      if (!std::isnan(v)) {
        sum += v;
        ++row.completed;
      }
    }
    if (row.completed == 0) {
      row.mean = row.se = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.mean = sum / static_cast<double>(row.completed);
    double ss = 0.0;
    for (double v : row.mse) {
      if (!std::isnan(v)) ss += (v - row.mean) * (v - row.mean);
    }
    row.se = row.completed > 1
                 ? std::sqrt(ss / static_cast<double>(row.completed - 1) / static_cast<double>(row.completed))
                 : 0.0;
  }
  return table;
}

SimConfig heterogeneous_config(bool full_scale, Covariance covariance, double n_over_p, std::uint64_t seed) {
  const std::size_t k = full_scale ? 32 : 8;
  const std::vector<std::size_t> sizes(k, 25);
  SimConfig c;
  c.layout = GroupLayout::contiguous(sizes);
  c.n = static_cast<std::size_t>(std::llround(n_over_p * static_cast<double>(25 * k)));
  c.n_test = 10000;
  c.alphas = linear_alphas(k);
  c.sigma = 5.0;
  c.covariance = std::move(covariance);
  c.seed = seed;
  return c;
}

std::string strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::optimal_vector: return "optimal-vector";
    case Strategy::optimal_common: return "optimal-common";
    case Strategy::first_group: return "first-group";
  }
  return "unknown";
}

RiskSpec realized_spec(const RiskSpec& spec, std::size_t n) {
  if (n == 0) throw ValidationError("need n >= 1");
  std::vector<double> gammas;
  for (double g : spec.gammas) {
    const auto p_g = std::llround(g * static_cast<double>(n));
    if (p_g < 1) throw ValidationError("gamma_g * n rounds to zero features");
    gammas.push_back(static_cast<double>(p_g) / static_cast<double>(n));
  }
  return RiskSpec(std::move(gammas), spec.alpha_sq, spec.spectra, spec.sigma_sq);
}

std::vector<TheoryRow> empirical_vs_theoretical(const RiskSpec& spec, std::size_t n, std::size_t n_test,
                                                std::uint64_t seed, const std::vector<Strategy>& strategies,
                                                Law coef_law, Law noise_law) {
  if (n_test == 0) throw ValidationError("need n_test >= 1");
  const RiskSpec real = realized_spec(spec, n);
  std::vector<std::size_t> sizes;
  for (double g : real.gammas) sizes.push_back(static_cast<std::size_t>(std::llround(g * static_cast<double>(n))));

  SimConfig config;
  config.n = n;
  config.n_test = n_test;
  config.layout = GroupLayout::contiguous(sizes);
  for (double a : real.alpha_sq) config.alphas.push_back(std::sqrt(a));
  config.sigma = std::sqrt(real.sigma_sq);
  config.covariance = Covariance::block_spectral(real.spectra);
  config.coef_law = coef_law;
  config.noise_law = noise_law;
  config.seed = seed;
  config.validate();

  const Vector w = draw_coefficients(config);
  const GroupedDesign train = draw_design(config, w, n, 1, 2);

  std::vector<TheoryRow> rows;
  Matrix delta(train.p(), static_cast<Eigen::Index>(strategies.size()));
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    TheoryRow row;
    row.strategy = strategies[s];
    switch (strategies[s]) {
      case Strategy::optimal_vector: row.lambda = optimal_lambda(real); break;
      case Strategy::optimal_common:
        row.lambda = RegVector::uniform(real.num_groups(), optimal_common_lambda(real));
        break;
      case Strategy::first_group: row.lambda = optimal_first_group_lambda(real); break;
    }
    row.theoretical = asymptotic_risk(real, row.lambda);
    delta.col(static_cast<Eigen::Index>(s)) = ridge_coefficients(train, row.lambda) - w;
    rows.push_back(std::move(row));
  }

  // Test rows are streamed so n_test x p is never held at once.
  FeatureSampler sampler(config, derive_seed(seed, 3));
  Drawer noise(derive_seed(seed, 4));
  const auto cols = static_cast<Eigen::Index>(strategies.size());
  Vector err_sq = Vector::Zero(cols);
  Vector mse = Vector::Zero(cols);
  constexpr std::size_t kChunk = 1000;
  for (std::size_t done = 0; done < n_test;) {
    const std::size_t count = std::min(kChunk, n_test - done);
    const Matrix x = sampler.rows(count);
    const Matrix pred_err = x * delta;  // x'(w_hat - w)
    Vector e(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = config.sigma * noise(noise_law);
    err_sq += pred_err.colwise().squaredNorm().transpose();
    mse += (pred_err.colwise() - e).colwise().squaredNorm().transpose();
    done += count;
  }
  const Vector var = sampler.variances();
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto c = static_cast<Eigen::Index>(s);
    rows[s].empirical = real.sigma_sq + err_sq(c) / static_cast<double>(n_test);
    rows[s].test_mse = mse(c) / static_cast<double>(n_test);
    rows[s].exact = real.sigma_sq + (delta.col(c).array().square() * var.array()).sum();
  }
  return rows;
}

}  // namespace sigmaridge
