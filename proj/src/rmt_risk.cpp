#include "sigmaridge/rmt_risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sigmaridge {

SpectralDist::SpectralDist(Vector atoms, Vector masses) : atoms_(std::move(atoms)), masses_(std::move(masses)) {
  if (atoms_.size() == 0 || atoms_.size() != masses_.size()) {
    throw ValidationError("spectral distribution needs matching, non-empty atoms and masses");
  }
  if (!(atoms_.array() > 0.0).all() || !atoms_.allFinite()) {
    throw ValidationError("spectral atoms must be positive and finite");
  }
  if (!(masses_.array() >= 0.0).all() || std::abs(masses_.sum() - 1.0) > 1e-12) {
    throw ValidationError("spectral masses must be nonnegative and sum to 1");
  }
}

SpectralDist SpectralDist::point_mass(double t) { return SpectralDist(Vector::Constant(1, t), Vector::Ones(1)); }

namespace {

Vector exponential_midpoint_quantiles(double rate, std::size_t m) {
  const auto mi = static_cast<Eigen::Index>(m);
  Vector atoms(mi);
  for (Eigen::Index k = 0; k < mi; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    atoms(k) = -std::log1p(-q) / rate;
  }
  return atoms;
}

constexpr double kGaussNodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                   0.9602898564975363};
constexpr double kGaussWeights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};

}  // namespace

SpectralDist SpectralDist::exponential(double rate, std::size_t m) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("exponential rate must be positive");
  std::vector<double> edges{0.0};
  for (double x = 1e-12; x < 1.0; x *= 2.0) edges.push_back(x);
  const std::size_t geometric = edges.size();
  if (m < 8 * (geometric + 4)) {
    throw ValidationError("exponential law needs at least " + std::to_string(8 * (geometric + 4)) + " atoms");
  }
  const std::size_t uniform = m / 8 - geometric;
  constexpr double kUpper = 40.0;
  for (std::size_t i = 0; i <= uniform; ++i) {
    edges.push_back(1.0 + (kUpper - 1.0) * static_cast<double>(i) / static_cast<double>(uniform));
  }
  const auto count = static_cast<Eigen::Index>(8 * (edges.size() - 1));
  Vector atoms(count);
  Vector masses(count);
  Eigen::Index k = 0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double half = 0.5 * (edges[e + 1] - edges[e]);
    const double mid = 0.5 * (edges[e + 1] + edges[e]);
    for (int j = 0; j < 4; ++j) {
      for (const double sign : {-1.0, 1.0}) {
        const double x = mid + sign * half * kGaussNodes[j];
        atoms(k) = x / rate;
        masses(k) = half * kGaussWeights[j] * std::exp(-x);
        ++k;
      }
    }
  }
  masses /= masses.sum();
  SpectralDist out(std::move(atoms), std::move(masses));
  out.exponential_rate_ = rate;
  return out;
}

double SpectralDist::mean() const { return atoms_.dot(masses_); }

Vector SpectralDist::eigenvalues(std::size_t count) const {
  if (count == 0) throw ValidationError("eigenvalue count must be positive");
  if (exponential_rate_) return exponential_midpoint_quantiles(*exponential_rate_, count);
  const auto ci = static_cast<Eigen::Index>(count);
  Vector out(ci);
  Eigen::Index atom = 0;
  double cumulative = masses_(0);
  for (Eigen::Index i = 0; i < ci; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    while (cumulative < q && atom + 1 < atoms_.size()) cumulative += masses_(++atom);
    out(i) = atoms_(atom);
  }
  return out;
}

bool SpectralDist::operator==(const SpectralDist& other) const {
  return atoms_.size() == other.atoms_.size() && (atoms_.array() == other.atoms_.array()).all() &&
         (masses_.array() == other.masses_.array()).all();
}

RiskSpec::RiskSpec(std::vector<double> gammas_in, std::vector<double> alpha_sq_in,
                   std::vector<SpectralDist> spectra_in, double sigma_sq_in)
    : gammas(std::move(gammas_in)),
      alpha_sq(std::move(alpha_sq_in)),
      spectra(std::move(spectra_in)),
      sigma_sq(sigma_sq_in) {
  if (gammas.empty()) throw ValidationError("risk spec needs at least one group");
  if (alpha_sq.size() != gammas.size() || spectra.size() != gammas.size()) {
    throw ValidationError("risk spec: gammas, alpha_sq and spectra must have the same length");
  }
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    if (!(gammas[g] > 0.0) || !std::isfinite(gammas[g])) throw ValidationError("gamma_g must be positive");
    if (!(alpha_sq[g] >= 0.0) || !std::isfinite(alpha_sq[g])) throw ValidationError("alpha_g^2 must be >= 0");
  }
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) throw ValidationError("sigma^2 must be positive");
}

RiskSpec RiskSpec::identity(std::vector<double> gammas, std::vector<double> alpha_sq, double sigma_sq) {
  std::vector<SpectralDist> spectra(gammas.size(), SpectralDist::identity());
  return RiskSpec(std::move(gammas), std::move(alpha_sq), std::move(spectra), sigma_sq);
}

double RiskSpec::gamma() const {
  double s = 0.0;
  for (double g : gammas) s += g;
  return s;
}

bool RiskSpec::equal_spectra() const {
  return std::all_of(spectra.begin(), spectra.end(), [&](const SpectralDist& h) { return h == spectra.front(); });
}

namespace {

struct Sums {
  double s1 = 0.0;   // sum_j gamma_j int (lambda_j/t + u)^-1
  double s_u = 0.0;  // sum_j gamma_j int (lambda_j/t) (lambda_j/t + u)^-2
};

Sums evaluate_sums(const RiskSpec& spec, const RegVector& lambda, double u) {
  Sums s;
  for (std::size_t j = 0; j < spec.num_groups(); ++j) {
    if (lambda.is_dropped(j)) continue;
    const auto& h = spec.spectra[j];
    double a1 = 0.0;
    double au = 0.0;
    for (Eigen::Index k = 0; k < h.atoms().size(); ++k) {
      const double r = lambda[j] / h.atoms()(k);
      const double inv = 1.0 / (r + u);
      a1 += h.masses()(k) * inv;
      au += h.masses()(k) * r * inv * inv;
    }
    s.s1 += spec.gammas[j] * a1;
    s.s_u += spec.gammas[j] * au;
  }
  return s;
}

double iterate_u(const RiskSpec& spec, const RegVector& lambda, std::size_t& iterations, bool& converged) {
  // G is increasing with G(1) <= 1, so iterates decrease monotonically from u0 = 1.
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double u = 1.0;
  double prev_step = 0.0;
  converged = false;
  for (iterations = 0; iterations < 10000; ++iterations) {
    const double next = 1.0 / (1.0 + evaluate_sums(spec, lambda, u).s1);
    const double step = u - next;
    u = next;
    if (step <= 4.0 * eps * u) {
      converged = true;
      break;
    }
    if (prev_step > 0.0) {
      const double rate = step / prev_step;
      if (rate < 1.0 && step * rate / (1.0 - rate) <= 1e-15 * u) {
        converged = true;
        break;
      }
    }
    prev_step = step;
  }
  return u;
}

double bisect_u(const RiskSpec& spec, const RegVector& lambda, std::size_t& iterations) {
  // F(u) = u (1 + s1(u)) - 1 is strictly increasing, F(0) = -1, F(1) >= 0.
  double lo = 0.0;
  double hi = 1.0;
  for (iterations = 0; iterations < 2000; ++iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double value = mid * (1.0 + evaluate_sums(spec, lambda, mid).s1) - 1.0;
    if (value == 0.0) return mid;
    (value < 0.0 ? lo : hi) = mid;
  }
  const double f_lo = std::abs(lo * (1.0 + evaluate_sums(spec, lambda, lo).s1) - 1.0);
  const double f_hi = std::abs(hi * (1.0 + evaluate_sums(spec, lambda, hi).s1) - 1.0);
  return f_lo < f_hi ? lo : hi;
}

void check_lambda(const RiskSpec& spec, const RegVector& lambda) {
  if (lambda.size() != spec.num_groups()) {
    throw ValidationError("lambda has " + std::to_string(lambda.size()) + " entries, spec has " +
                          std::to_string(spec.num_groups()) + " groups");
  }
}

}  // namespace

FixedPointSolution solve_fixed_point(const RiskSpec& spec, const RegVector& lambda, FixedPointMethod method) {
  check_lambda(spec, lambda);
  const double gamma = spec.gamma();
  const std::size_t k = spec.num_groups();

  FixedPointSolution out;
  out.grad_f = Vector::Zero(static_cast<Eigen::Index>(k));
  if (lambda.all_dropped()) return out;

  double u = 1.0;
  bool converged = false;
  if (method != FixedPointMethod::bisection) {
    u = iterate_u(spec, lambda, out.iterations, converged);
    out.method_used = FixedPointMethod::iteration;
  }
  if (!converged) {
    if (method == FixedPointMethod::iteration) {
      throw ConvergenceError("fixed-point iteration did not converge in 10^4 steps", std::abs(u));
    }
    u = bisect_u(spec, lambda, out.iterations);
    out.method_used = FixedPointMethod::bisection;
  }

  const Sums s = evaluate_sums(spec, lambda, u);
  out.u = u;
  out.f = (1.0 / u - 1.0) / gamma;
  out.residual = std::abs(1.0 / u - 1.0 - s.s1) / gamma;
  if (!(out.residual <= 1e-12 * std::max(1.0, out.f))) {
    throw ConvergenceError("fixed-point residual " + std::to_string(out.residual) + " above tolerance",
                           out.residual);
  }

  // Implicit differentiation of u (1 + s1(u, lambda)) = 1.
  const double u_fu = u * (1.0 + s.s_u);
  for (std::size_t j = 0; j < k; ++j) {
    if (lambda.is_dropped(j)) continue;
    const auto& h = spec.spectra[j];
    double integral = 0.0;
    for (Eigen::Index a = 0; a < h.atoms().size(); ++a) {
      const double t = h.atoms()(a);
      const double inv = 1.0 / (lambda[j] / t + u);
      integral += h.masses()(a) * inv * inv / t;
    }
    out.grad_f(static_cast<Eigen::Index>(j)) = -(spec.gammas[j] / gamma) * integral / u_fu;
  }
  return out;
}

double asymptotic_risk(const RiskSpec& spec, const RegVector& lambda) {
  check_lambda(spec, lambda);
  const FixedPointSolution fp = solve_fixed_point(spec, lambda);
  const double gamma = spec.gamma();
  // Risk at noise sigma^2 is sigma^2 times the unit-noise risk with alpha^2 / sigma^2.
  const double u_fu = fp.u * (1.0 + evaluate_sums(spec, lambda, fp.u).s_u);
  double risk = 1.0 + gamma * fp.f;
  for (std::size_t j = 0; j < spec.num_groups(); ++j) {
    const double a = spec.alpha_sq[j] / spec.sigma_sq;
    if (lambda.is_dropped(j)) {
      // Limit of the derivative term as lambda_j -> inf.
      risk += a * spec.spectra[j].mean() / u_fu;
    } else {
      const double l = lambda[j];
      risk += (gamma / spec.gammas[j]) * (spec.gammas[j] * l - a * l * l) * fp.grad_f(static_cast<Eigen::Index>(j));
    }
  }
  return spec.sigma_sq * risk;
}

RegVector optimal_lambda(const RiskSpec& spec) {
  Vector out(static_cast<Eigen::Index>(spec.num_groups()));
  for (std::size_t g = 0; g < spec.num_groups(); ++g) {
    out(static_cast<Eigen::Index>(g)) =
        spec.alpha_sq[g] > 0.0 ? spec.gammas[g] * spec.sigma_sq / spec.alpha_sq[g] : kInf;
  }
  return RegVector(out);
}

double optimal_single_lambda(const RiskSpec& spec) {
  if (!spec.equal_spectra()) throw ValidationError("the closed-form single lambda needs equal group spectra");
  double total = 0.0;
  for (double a : spec.alpha_sq) total += a;
  return total > 0.0 ? spec.gamma() * spec.sigma_sq / total : kInf;
}

double optimal_common_lambda(const RiskSpec& spec) {
  if (spec.equal_spectra()) return optimal_single_lambda(spec);
  double total = 0.0;
  for (double a : spec.alpha_sq) total += a;
  if (!(total > 0.0)) return kInf;

  const std::size_t k = spec.num_groups();
  auto risk_at = [&](double log_l) { return asymptotic_risk(spec, RegVector::uniform(k, std::exp(log_l))); };

  // Coarse scan, then golden section around the best grid point.
  const double lo = std::log(1e-6);
  const double hi = std::log(1e6);
  constexpr int kScan = 121;
  const double h = (hi - lo) / (kScan - 1);
  int best = 0;
  double best_risk = kInf;
  for (int i = 0; i < kScan; ++i) {
    const double r = risk_at(lo + h * i);
    if (r < best_risk) {
      best_risk = r;
      best = i;
    }
  }
  double a = lo + h * std::max(best - 1, 0);
  double b = lo + h * std::min(best + 1, kScan - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double rc = risk_at(c);
  double rd = risk_at(d);
  while (b - a > 1e-10) {
    if (rc <= rd) {
      b = d;
      d = c;
      rd = rc;
      c = b - inv_phi * (b - a);
      rc = risk_at(c);
    } else {
      a = c;
      c = d;
      rc = rd;
      d = a + inv_phi * (b - a);
      rd = risk_at(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

RegVector optimal_first_group_lambda(const RiskSpec& spec) {
  Vector out = Vector::Constant(static_cast<Eigen::Index>(spec.num_groups()), kInf);
  if (spec.alpha_sq[0] > 0.0) {
    double noise = spec.sigma_sq;
    for (std::size_t g = 1; g < spec.num_groups(); ++g) noise += spec.alpha_sq[g] * spec.spectra[g].mean();
    out(0) = spec.gammas[0] * noise / spec.alpha_sq[0];
  }
  return RegVector(out);
}

double identity_single_lambda_u(double gamma, double lambda) {
  const double b = lambda + gamma - 1.0;
  const double r = std::sqrt(b * b + 4.0 * lambda);
  // Rationalized root when b > 0 to avoid cancellation.
  return b <= 0.0 ? (r - b) / 2.0 : 2.0 * lambda / (r + b);
}

double identity_single_lambda_risk(double gamma, double alpha_sq_total, double lambda) {
  const double u = identity_single_lambda_u(gamma, lambda);
  return 1.0 / u - (gamma * lambda - alpha_sq_total * lambda * lambda) /
                       ((lambda + u) * (lambda + u) - gamma * u * u);
}

double identity_optimal_single_risk(double gamma, double lambda_star) {
  const double b = gamma + lambda_star - 1.0;
  return (b + std::sqrt(b * b + 4.0 * lambda_star)) / (2.0 * lambda_star);
}

TwoAnalystRisks two_analyst_risks(double gamma1, double gamma2, double alpha1_sq, double alpha2_sq) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw ValidationError("aspect ratios must be positive");
  if (!(alpha1_sq > 0.0) || !(alpha2_sq >= 0.0)) throw ValidationError("need alpha1^2 > 0 and alpha2^2 >= 0");
  TwoAnalystRisks out;
  out.lambda_first_group = gamma1 * (alpha2_sq + 1.0) / alpha1_sq;
  out.risk_first_group = (alpha2_sq + 1.0) * identity_optimal_single_risk(gamma1, out.lambda_first_group);
  const double gamma = gamma1 + gamma2;
  out.lambda_both_groups = gamma / (alpha1_sq + alpha2_sq);
  out.risk_both_groups = identity_optimal_single_risk(gamma, out.lambda_both_groups);
  return out;
}

}  // namespace sigmaridge
