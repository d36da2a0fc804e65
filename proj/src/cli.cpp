#include "sigmaridge/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigmaridge/group_lasso.hpp"
#include "sigmaridge/io.hpp"
#include "sigmaridge/ridge.hpp"
#include "sigmaridge/rmt_risk.hpp"
#include "sigmaridge/sigma_path.hpp"
#include "sigmaridge/sim.hpp"

namespace sigmaridge::cli {

namespace {

using io::format_double;
using Clock = std::chrono::steady_clock;

struct DataOptions {
  std::string data;
  std::string response;
  std::string groups;
};

struct TuningOptions {
  std::string method = "sigma-ridge";
  std::string sigma_grid = "100,0.001";
  std::string lambda_init = "auto";
  std::uint64_t seed = 0;
  double holdout = 0.3;
  std::size_t multi_points = 5000;
};

struct LoadedData {
  GroupedDesign design;
  std::vector<std::string> features;
  std::vector<std::string> feature_groups;
  std::string data_hash;
  std::string groups_hash;
};

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string seconds_since(Clock::time_point start, bool timing) {
  if (!timing) return "NA";
  return format_double(std::chrono::duration<double>(Clock::now() - start).count());
}

LoadedData load_data(const DataOptions& opt) {
  if (opt.response.empty()) throw ValidationError("--response is required");
  if (opt.groups.empty()) throw ValidationError("--groups is required");
  const io::NumericTable table = io::read_numeric_csv(opt.data);
  const std::size_t response_col = table.column(opt.response);
  const auto manifest = io::read_manifest(opt.groups);

  std::map<std::string, std::string> group_of;
  std::vector<std::string> declared;
  for (const auto& [feature, group] : manifest) {
    group_of[feature] = group;
    if (std::find(declared.begin(), declared.end(), group) == declared.end()) declared.push_back(group);
  }

  LoadedData out;
  std::vector<std::string> missing;
  std::vector<Eigen::Index> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == response_col) continue;
    const auto it = group_of.find(table.header[c]);
    if (it == group_of.end()) {
      missing.push_back(table.header[c]);
      continue;
    }
    out.features.push_back(table.header[c]);
    out.feature_groups.push_back(it->second);
    cols.push_back(static_cast<Eigen::Index>(c));
  }
  std::vector<std::string> unknown;
  for (const auto& [feature, group] : manifest) {
    if (std::find(table.header.begin(), table.header.end(), feature) == table.header.end()) unknown.push_back(feature);
    if (feature == opt.response) throw ValidationError("manifest assigns the response '" + feature + "' to a group");
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "data columns and group manifest do not match";
    if (!missing.empty()) msg += "; columns without a group: " + join(missing, ", ");
    if (!unknown.empty()) msg += "; manifest features not in the data: " + join(unknown, ", ");
    throw LayoutError(msg);
  }
  if (out.features.empty()) throw ValidationError("no feature columns besides the response");

  const GroupLayout layout = build_layout(out.feature_groups, declared);
  Matrix x(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = table.values.col(cols[k]);
  out.design = GroupedDesign(std::move(x), table.values.col(static_cast<Eigen::Index>(response_col)), layout);
  out.data_hash = io::hex64(io::fnv1a64(io::read_text_file(opt.data)));
  out.groups_hash = io::hex64(io::fnv1a64(io::read_text_file(opt.groups)));
  return out;
}

std::pair<GroupedDesign, StandardizationState> standardize_named(const GroupedDesign& design,
                                                                const std::vector<std::string>& features,
                                                                const std::string& response) {
  try {
    return standardize(design);
  } catch (const ConstantColumnError& e) {
    const std::string name = e.column() == ConstantColumnError::kResponse ? response : features.at(e.column());
    throw ConstantColumnError(e.column(), "column '" + name + "' is constant and cannot be standardized");
  }
}

std::pair<std::size_t, double> parse_sigma_grid(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--sigma-grid expects <n,lo_frac>");
  const double count = io::parse_double(text.substr(0, comma), "--sigma-grid count");
  const double lo = io::parse_double(text.substr(comma + 1), "--sigma-grid lo_frac");
  if (!(count >= 1.0) || count != std::floor(count) || count > 1e6) {
    throw ValidationError("--sigma-grid count must be a positive integer");
  }
  if (!(lo > 0.0 && lo <= 1.0)) throw ValidationError("--sigma-grid lo_frac must be in (0, 1]");
  return {static_cast<std::size_t>(count), lo};
}

std::optional<double> parse_lambda_init(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const double v = io::parse_double(text, "--lambda-init");
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("--lambda-init must be >= 0, finite or 'auto'");
  return v;
}

// A pilot penalty of 0 is replaced by the smallest single-lambda grid value.
std::optional<double> resolve_lambda_init(const std::string& text, const GroupedDesign& d,
                                          std::vector<std::string>& warnings) {
  const auto v = parse_lambda_init(text);
  if (!v || *v > 0.0) return v;
  const double lo = log_grid(default_lambda_max(d), 100, 1e-6).front();
  warnings.push_back("--lambda-init 0 replaced by the smallest grid value " + format_double(lo));
  return lo;
}

Method parse_cli_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw ValidationError("unknown method '" + name + "'");
  return *m;
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_cli_method(item));
  if (out.empty()) throw ValidationError("empty method list");
  return out;
}

void add_tuning_settings(io::ReproHeader& h, const TuningOptions& t) {
  h.settings.emplace_back("method", t.method);
  h.settings.emplace_back("sigma_grid", t.sigma_grid);
  h.settings.emplace_back("lambda_init", t.lambda_init);
  h.settings.emplace_back("holdout", format_double(t.holdout));
  h.settings.emplace_back("multi_points", std::to_string(t.multi_points));
}

void add_data_settings(io::ReproHeader& h, const DataOptions& d, const LoadedData& data) {
  h.settings.emplace_back("data", d.data);
  h.settings.emplace_back("data_fnv1a", data.data_hash);
  h.settings.emplace_back("response", d.response);
  h.settings.emplace_back("groups", d.groups);
  h.settings.emplace_back("groups_fnv1a", data.groups_hash);
}

struct MethodFit {
  Vector coef;  // standardized scale
  Vector lambda;
  std::optional<double> sigma;
  std::optional<double> sigma_max;
  std::optional<double> lambda_gl;
  std::optional<double> cv_star;
  std::vector<std::string> warnings;
};

std::optional<double> finite(double v) { return std::isfinite(v) ? std::optional<double>(v) : std::nullopt; }

MethodFit fit_with(Method method, const GroupedDesign& d, const TuningOptions& t) {
  MethodFit out;
  const std::size_t k = d.layout.num_groups();
  switch (method) {
    case Method::sigma_ridge: {
      SigmaRidgeOptions opt;
      std::tie(opt.grid_size, opt.lo_frac) = parse_sigma_grid(t.sigma_grid);
      opt.lambda_init = resolve_lambda_init(t.lambda_init, d, out.warnings);
      SigmaRidgeResult r = fit_sigma_ridge(d, opt);
      out.coef = r.fit.coef;
      out.lambda = r.best.lambda.values();
      out.sigma = r.best.sigma;
      out.sigma_max = r.sigma_max;
      out.cv_star = finite(r.fit.cv_star);
      out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
      break;
    }
    case Method::single_ridge: {
      const RidgeFit fit = fit_group_ridge(d, RegVector::uniform(k, tune_single_lambda(d).lambda_init));
      out.coef = fit.coef;
      out.lambda = fit.lambda.values();
      out.cv_star = finite(fit.cv_star);
      break;
    }
    case Method::multi_ridge: {
      const RidgeFit fit = fit_group_ridge(d, tune_multi_lambda(d, t.seed, t.multi_points).lambda);
      out.coef = fit.coef;
      out.lambda = fit.lambda.values();
      out.cv_star = finite(fit.cv_star);
      break;
    }
    case Method::group_lasso: {
      const GroupLassoTuning tuned = tune_group_lasso(d, t.holdout, t.seed);
      out.coef = tuned.fit.coef;
      out.lambda_gl = tuned.lambda_gl;
      out.lambda = tuned.fit.induced_lambda ? tuned.fit.induced_lambda->values()
                                            : Vector::Constant(static_cast<Eigen::Index>(k),
                                                               std::numeric_limits<double>::quiet_NaN());
      break;
    }
    case Method::bayes_oracle:
      throw ValidationError("bayes-oracle needs the true model parameters and is only available in 'simulate'");
  }
  return out;
}

// '-' selects the command's output stream.
void emit(std::ostream& out, const std::string& path, const std::string& content) {
  if (path == "-") {
    out << content;
  } else {
    io::write_text_file(path, content);
  }
}

int cmd_fit(const DataOptions& d, const TuningOptions& t, const std::string& out_path, bool timing, std::ostream& out) {
  const auto start = Clock::now();
  const LoadedData data = load_data(d);
  const Method method = parse_cli_method(t.method);
  const auto [std_design, state] = standardize_named(data.design, data.features, d.response);
  const MethodFit fit = fit_with(method, std_design, t);

  io::FittedModel model;
  model.method = t.method;
  model.response = d.response;
  model.features = data.features;
  model.feature_groups = data.feature_groups;
  model.group_labels = data.design.layout.labels();
  model.coef_standardized = fit.coef;
  model.coef = state.raw_coefficients(fit.coef);
  model.intercept = state.raw_intercept(fit.coef);
  model.standardization = state;
  model.sigma = fit.sigma;
  model.sigma_max = fit.sigma_max;
  model.lambda_gl = fit.lambda_gl;
  model.lambda = fit.lambda;
  model.cv_star = fit.cv_star;
  model.warnings = fit.warnings;
  model.header.command = "fit";
  model.header.seed = t.seed;
  add_data_settings(model.header, d, data);
  add_tuning_settings(model.header, t);
  model.wall_time = seconds_since(start, timing);
  emit(out, out_path, io::model_to_json(model));

  std::ostringstream r;
  r << model.header.render_comment_lines();
  r << "method: " << t.method << "\n";
  r << "n: " << data.design.n() << "\np: " << data.design.p() << "\ngroups: " << model.group_labels.size() << "\n";
  if (fit.sigma) r << "sigma_hat: " << format_double(*fit.sigma) << "\n";
  if (fit.sigma_max) r << "sigma_max: " << format_double(*fit.sigma_max) << "\n";
  if (fit.lambda_gl) r << "lambda_gl: " << format_double(*fit.lambda_gl) << "\n";
  for (std::size_t g = 0; g < model.group_labels.size(); ++g) {
    r << "lambda[" << model.group_labels[g] << "]: " << format_double(fit.lambda(static_cast<Eigen::Index>(g)))
      << "\n";
  }
  r << "cv_star: " << (fit.cv_star ? format_double(*fit.cv_star) : "NA") << "\n";
  for (const auto& w : fit.warnings) r << "warning: " << w << "\n";
  r << "wall_time: " << model.wall_time << "\n";
  if (out_path != "-") r << "model: " << out_path << "\n";
  out << r.str();
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path,
                std::ostream& out) {
  const io::FittedModel model = io::model_from_json(io::read_text_file(model_path));
  const io::NumericTable table = io::read_numeric_csv(data_path);
  std::vector<std::string> missing;
  Vector pred = Vector::Constant(table.values.rows(), model.intercept);
  for (std::size_t j = 0; j < model.features.size(); ++j) {
    const auto it = std::find(table.header.begin(), table.header.end(), model.features[j]);
    if (it == table.header.end()) {
      missing.push_back(model.features[j]);
      continue;
    }
    pred += model.coef(static_cast<Eigen::Index>(j)) * table.values.col(it - table.header.begin());
  }
  if (!missing.empty()) throw ValidationError("prediction data lacks model features: " + join(missing, ", "));

  io::ReproHeader h;
  h.command = "predict";
  h.seed = model.header.seed;
  h.settings.emplace_back("model", model_path);
  h.settings.emplace_back("model_fnv1a", io::hex64(io::fnv1a64(io::read_text_file(model_path))));
  h.settings.emplace_back("data", data_path);
  h.settings.emplace_back("data_fnv1a", io::hex64(io::fnv1a64(io::read_text_file(data_path))));
  std::string csv = h.render_comment_lines() + "row,prediction\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) csv += std::to_string(i + 1) + "," + format_double(pred(i)) + "\n";
  emit(out, out_path, csv);
  return kExitOk;
}

int cmd_path(const DataOptions& d, const TuningOptions& t, const std::string& out_path, const std::string& coef_path,
             bool timing, std::ostream& out) {
  const auto start = Clock::now();
  const LoadedData data = load_data(d);
  const auto [std_design, state] = standardize_named(data.design, data.features, d.response);
  const auto [count, lo_frac] = parse_sigma_grid(t.sigma_grid);
  std::vector<std::string> warnings;
  const auto lambda_init_opt = resolve_lambda_init(t.lambda_init, std_design, warnings);
  const double lambda_init = lambda_init_opt ? *lambda_init_opt : tune_single_lambda(std_design).lambda_init;
  const MomentSystem ms = build_moment_system(std_design, lambda_init);
  const double smax = sigma_max(ms);
  const auto path = evaluate_sigma_path(std_design, ms, linear_grid(smax, count, lo_frac));

  io::ReproHeader h;
  h.command = "path";
  h.seed = t.seed;
  add_data_settings(h, d, data);
  h.settings.emplace_back("sigma_grid", t.sigma_grid);
  h.settings.emplace_back("lambda_init", t.lambda_init);
  h.settings.emplace_back("lambda_init_value", format_double(lambda_init));
  h.settings.emplace_back("sigma_max", format_double(smax));
  for (const auto& w : warnings) h.notes.emplace_back("warning", w);
  h.notes.emplace_back("wall_time", seconds_since(start, timing));

  const auto& labels = data.design.layout.labels();
  std::string csv = h.render_comment_lines() + "sigma";
  for (const auto& l : labels) csv += ",lambda_" + l;
  csv += ",cv_star,active_set,rank_deficient\n";
  for (const auto& pt : path) {
    csv += format_double(pt.sigma);
    for (std::size_t g = 0; g < labels.size(); ++g) csv += "," + format_double(pt.lambda[g]);
    std::vector<std::string> active;
    for (auto g : pt.active_set) active.push_back(labels[g]);
    csv += "," + format_double(pt.cv_star) + "," + join(active, ";") + "," + (pt.rank_deficient ? "1" : "0") + "\n";
  }
  emit(out, out_path, csv);

  if (!coef_path.empty()) {
    std::string coef_csv = h.render_comment_lines() + "sigma";
    for (const auto& f : data.features) coef_csv += "," + f;
    coef_csv += "\n";
    for (const auto& pt : path) {
      const Vector coef = ridge_coefficients(std_design, pt.lambda);
      coef_csv += format_double(pt.sigma);
      for (Eigen::Index j = 0; j < coef.size(); ++j) coef_csv += "," + format_double(coef(j));
      coef_csv += "\n";
    }
    emit(out, coef_path, coef_csv);
  }
  return kExitOk;
}

SpectralDist parse_spectrum(const nlohmann::json& j) {
  const std::string type = j.value("type", "identity");
  if (type == "identity") return SpectralDist::identity();
  if (type == "exponential") return SpectralDist::exponential(j.value("rate", 1.0), j.value("atoms", 2000));
  if (type == "atoms") {
    const auto atoms = j.at("atoms").get<std::vector<double>>();
    const auto masses = j.at("masses").get<std::vector<double>>();
    return SpectralDist(Eigen::Map<const Vector>(atoms.data(), static_cast<Eigen::Index>(atoms.size())),
                        Eigen::Map<const Vector>(masses.data(), static_cast<Eigen::Index>(masses.size())));
  }
  throw ValidationError("unknown spectrum type '" + type + "'");
}

struct CurveSpec {
  std::vector<double> gammas;
  std::vector<SpectralDist> spectra;
  double sigma_sq = 1.0;
  std::vector<std::vector<double>> alpha_rows;
  std::vector<double> fractions;
};

CurveSpec parse_curve_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("risk spec is not valid JSON: ") + e.what());
  }
  try {
    CurveSpec s;
    s.gammas = j.at("gammas").get<std::vector<double>>();
    const std::size_t k = s.gammas.size();
    s.sigma_sq = j.value("sigma_sq", 1.0);
    if (!j.contains("spectra")) {
      s.spectra.assign(k, SpectralDist::identity());
    } else if (j["spectra"].is_array()) {
      for (const auto& e : j["spectra"]) s.spectra.push_back(parse_spectrum(e));
    } else {
      s.spectra.assign(k, parse_spectrum(j["spectra"]));
    }
    if (j.contains("sweep")) {
      if (k != 2) throw ValidationError("a signal-fraction sweep needs exactly 2 groups");
      const double total = j.at("alpha_sq_total").get<double>();
      const auto& sw = j["sweep"];
      const double from = sw.value("from", 0.0);
      const double to = sw.value("to", 1.0);
      const int points = sw.value("points", 21);
      if (points < 1) throw ValidationError("sweep needs at least one point");
      if (!(from >= 0.0 && to <= 1.0 && from <= to)) throw ValidationError("sweep range must lie in [0, 1]");
      for (int i = 0; i < points; ++i) {
        const double frac = points == 1 ? from : from + (to - from) * i / (points - 1);
        s.fractions.push_back(frac);
        s.alpha_rows.push_back({frac * total, (1.0 - frac) * total});
      }
    } else {
      const auto a = j.at("alpha_sq").get<std::vector<double>>();
      double total = 0.0;
      for (double v : a) total += v;
      s.alpha_rows.push_back(a);
      s.fractions.push_back(total > 0.0 && !a.empty() ? a[0] / total : std::numeric_limits<double>::quiet_NaN());
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed risk spec: ") + e.what());
  }
}

int cmd_risk_curve(const std::string& spec_path, const std::string& out_path, std::size_t empirical_n,
                   std::size_t n_test, std::uint64_t seed, bool timing, std::ostream& out) {
  const auto start = Clock::now();
  const std::string text = io::read_text_file(spec_path);
  const CurveSpec cs = parse_curve_spec(text);
  const std::size_t k = cs.gammas.size();

  std::string body = "fraction";
  for (std::size_t g = 1; g <= k; ++g) body += ",alpha_sq_" + std::to_string(g);
  for (std::size_t g = 1; g <= k; ++g) body += ",lambda_opt_" + std::to_string(g);
  body += ",risk_optimal,lambda_common,risk_common,lambda_first_group,risk_first_group";
  if (empirical_n > 0) body += ",empirical_optimal,empirical_common,empirical_first_group";
  body += "\n";

  for (std::size_t r = 0; r < cs.alpha_rows.size(); ++r) {
    const RiskSpec spec(cs.gammas, cs.alpha_rows[r], cs.spectra, cs.sigma_sq);
    const RegVector opt = optimal_lambda(spec);
    const double common = optimal_common_lambda(spec);
    const RegVector first = optimal_first_group_lambda(spec);
    body += format_double(cs.fractions[r]);
    for (double a : cs.alpha_rows[r]) body += "," + format_double(a);
    for (std::size_t g = 0; g < k; ++g) body += "," + format_double(opt[g]);
    body += "," + format_double(asymptotic_risk(spec, opt));
    body += "," + format_double(common) + "," + format_double(asymptotic_risk(spec, RegVector::uniform(k, common)));
    body += "," + format_double(first[0]) + "," + format_double(asymptotic_risk(spec, first));
    if (empirical_n > 0) {
      const auto rows = empirical_vs_theoretical(spec, empirical_n, n_test, derive_seed(seed, r));
      for (const auto& row : rows) body += "," + format_double(row.empirical);
    }
    body += "\n";
  }

  io::ReproHeader h;
  h.command = "risk-curve";
  h.seed = seed;
  h.settings.emplace_back("spec", spec_path);
  h.settings.emplace_back("spec_fnv1a", io::hex64(io::fnv1a64(text)));
  h.settings.emplace_back("empirical_n", std::to_string(empirical_n));
  h.settings.emplace_back("n_test", std::to_string(n_test));
  h.notes.emplace_back("wall_time", seconds_since(start, timing));
  emit(out, out_path, h.render_comment_lines() + body);
  return kExitOk;
}

struct SimulateOptions {
  std::string covariance = "identity";
  double rho = 0.8;
  double n_ratio = 1.0;
  std::size_t reps = 0;
  std::size_t coarse_k = 0;
  std::string methods = "sigma-ridge,single-ridge,multi-ridge,group-lasso,bayes-oracle";
  std::uint64_t seed = 0;
  bool full_scale = false;
  std::size_t n_test = 10000;
  std::size_t multi_points = 5000;
};

int cmd_simulate(const SimulateOptions& s, const std::string& out_path, bool timing, std::ostream& out) {
  Covariance cov;
  if (s.covariance == "identity") {
    cov = Covariance::identity();
  } else if (s.covariance == "ar1") {
    cov = Covariance::ar1(s.rho);
  } else {
    throw ValidationError("--covariance must be 'identity' or 'ar1'");
  }
  if (!(s.n_ratio > 0.0)) throw ValidationError("--n-ratio must be positive");
  SimConfig config = heterogeneous_config(s.full_scale, cov, s.n_ratio, s.seed);
  if (s.n_test == 0) throw ValidationError("--n-test must be positive");
  config.n_test = s.n_test;
  const std::size_t reps = s.reps > 0 ? s.reps : (s.full_scale ? 400 : 50);
  const std::vector<Method> methods = parse_method_list(s.methods);
  ComparisonOptions opt;
  if (s.coarse_k > 0) opt.coarse_k = s.coarse_k;
  opt.multi_ridge_points = s.multi_points;

  const ComparisonTable table = run_comparison(config, methods, reps, opt);

  io::ReproHeader h;
  h.command = "simulate";
  h.seed = s.seed;
  h.settings.emplace_back("covariance", s.covariance);
  if (s.covariance == "ar1") h.settings.emplace_back("rho", format_double(s.rho));
  h.settings.emplace_back("n_ratio", format_double(s.n_ratio));
  h.settings.emplace_back("reps", std::to_string(reps));
  h.settings.emplace_back("coarse_k", std::to_string(table.k_coarse));
  h.settings.emplace_back("methods", s.methods);
  h.settings.emplace_back("full_scale", s.full_scale ? "1" : "0");
  h.settings.emplace_back("n_test", std::to_string(s.n_test));
  h.settings.emplace_back("multi_points", std::to_string(s.multi_points));
  std::string csv = h.render_comment_lines() + "method,K_coarse,n,covariance,mean_mse,se,completed,wall_time\n";
  for (const auto& row : table.rows) {
    csv += method_name(row.method) + "," + std::to_string(table.k_coarse) + "," + std::to_string(config.n) + "," +
           s.covariance + "," + format_double(row.mean) + "," + format_double(row.se) + "," +
           std::to_string(row.completed) + "," + (timing ? format_double(row.seconds) : "NA") + "\n";
  }
  for (const auto& row : table.rows) {
    for (const auto& f : row.failures) csv += "# failure " + method_name(row.method) + ": " + f + "\n";
  }
  emit(out, out_path, csv);
  return kExitOk;
}

int cmd_compare(const DataOptions& d, const TuningOptions& t, const std::string& methods_text,
                const std::string& out_path, bool timing, std::ostream& out) {
  const LoadedData data = load_data(d);
  const std::vector<Method> methods = parse_method_list(methods_text);
  const auto split = holdout_split(static_cast<std::size_t>(data.design.n()), t.holdout, t.seed);
  auto rows = [&](const std::vector<Eigen::Index>& idx) {
    Matrix x(static_cast<Eigen::Index>(idx.size()), data.design.p());
    Vector y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = data.design.X.row(idx[i]);
      y(static_cast<Eigen::Index>(i)) = data.design.Y(idx[i]);
    }
    return GroupedDesign(std::move(x), std::move(y), data.design.layout);
  };
  const GroupedDesign train = rows(split.train);
  const GroupedDesign test = rows(split.test);
  const auto [std_train, state] = standardize_named(train, data.features, d.response);
  const Matrix test_x = state.transform_features(test.X);

  io::ReproHeader h;
  h.command = "compare";
  h.seed = t.seed;
  add_data_settings(h, d, data);
  add_tuning_settings(h, t);
  h.settings.emplace_back("methods", methods_text);
  std::string csv = h.render_comment_lines() + "method,test_mse,n_train,n_test,wall_time\n";
  TuningOptions inner = t;
  // The fitting holdout is drawn from the training rows with a distinct seed.
  inner.seed = derive_seed(t.seed, 1);
  for (Method m : methods) {
    const auto start = Clock::now();
    const MethodFit fit = fit_with(m, std_train, inner);
    const Vector pred = state.inverse_response(test_x * fit.coef);
    const double mse = (test.Y - pred).squaredNorm() / static_cast<double>(test.n());
    csv += method_name(m) + "," + format_double(mse) + "," + std::to_string(train.n()) + "," +
           std::to_string(test.n()) + "," + seconds_since(start, timing) + "\n";
  }
  emit(out, out_path, csv);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-regularized ridge regression with sigma-path tuning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kVersion);

  DataOptions data;
  TuningOptions tuning;
  std::string out_path;
  std::string coef_path;
  bool timing = false;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("data", data.data, "Data CSV")->required();
    sub->add_option("--response", data.response, "Response column")->required();
    sub->add_option("--groups", data.groups, "Group manifest CSV (feature,group)")->required();
  };
  auto add_tuning = [&](CLI::App* sub) {
    sub->add_option("--sigma-grid", tuning.sigma_grid, "Sigma grid as <n,lo_frac>")->capture_default_str();
    sub->add_option("--lambda-init", tuning.lambda_init, "Pilot penalty or 'auto'")->capture_default_str();
    sub->add_option("--seed", tuning.seed, "Random seed")->capture_default_str();
    sub->add_option("--holdout", tuning.holdout, "Group-lasso holdout fraction")->capture_default_str();
    sub->add_option("--multi-points", tuning.multi_points, "Multi-ridge random grid points")->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit", "Fit a model and write it as JSON");
  add_data(fit);
  add_tuning(fit);
  fit->add_option("--method", tuning.method, "sigma-ridge | single-ridge | multi-ridge | group-lasso")
      ->capture_default_str();
  fit->add_option("--out", out_path, "Model JSON path ('-' for stdout)")->default_val("model.json");
  fit->add_flag("--timing", timing, "Record wall time");

  std::string model_path;
  auto* predict = app.add_subcommand("predict", "Predict with a fitted model");
  predict->add_option("model", model_path, "Model JSON")->required();
  predict->add_option("data", data.data, "Feature CSV")->required();
  predict->add_option("--out", out_path, "Output CSV ('-' for stdout)")->default_val("-");

  auto* path = app.add_subcommand("path", "Write the sigma path and its CV curve");
  add_data(path);
  add_tuning(path);
  path->add_option("--out", out_path, "Path CSV ('-' for stdout)")->default_val("-");
  path->add_option("--coef-out", coef_path, "Optional per-coefficient path CSV");
  path->add_flag("--timing", timing, "Record wall time");

  std::string spec_path;
  std::size_t empirical_n = 0;
  std::size_t n_test = 20000;
  std::uint64_t seed = 0;
  auto* risk = app.add_subcommand("risk-curve", "Limiting risk of three penalty strategies");
  risk->add_option("spec", spec_path, "Risk spec JSON")->required();
  risk->add_option("--out", out_path, "Curve CSV ('-' for stdout)")->default_val("-");
  risk->add_option("--empirical-n", empirical_n, "Add simulated risks at this n (0 = off)")->capture_default_str();
  risk->add_option("--n-test", n_test, "Test rows for simulated risks")->capture_default_str();
  risk->add_option("--seed", seed, "Random seed")->capture_default_str();
  risk->add_flag("--timing", timing, "Record wall time");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison on the heterogeneous design");
  simulate->add_option("--covariance", sim.covariance, "identity | ar1")->capture_default_str();
  simulate->add_option("--rho", sim.rho, "AR(1) correlation")->capture_default_str();
  simulate->add_option("--n-ratio", sim.n_ratio, "n / p")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replicates (default 50, or 400 with --full-scale)");
  simulate->add_option("--coarse-k", sim.coarse_k, "Groups seen by the grouped methods (default: all)");
  simulate->add_option("--methods", sim.methods, "Comma-separated methods")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--n-test", sim.n_test, "Test rows per replicate")->capture_default_str();
  simulate->add_option("--multi-points", sim.multi_points, "Multi-ridge random grid points")->capture_default_str();
  simulate->add_flag("--full-scale", sim.full_scale, "p = 800, K = 32, 400 replicates");
  simulate->add_option("--out", out_path, "Results CSV ('-' for stdout)")->default_val("-");
  simulate->add_flag("--timing", timing, "Record wall time");

  std::string methods_text = "sigma-ridge,single-ridge,multi-ridge,group-lasso";
  auto* compare = app.add_subcommand("compare", "Holdout comparison of methods on a data set");
  add_data(compare);
  add_tuning(compare);
  compare->add_option("--methods", methods_text, "Comma-separated methods")->capture_default_str();
  compare->add_option("--out", out_path, "Results CSV ('-' for stdout)")->default_val("-");
  compare->add_flag("--timing", timing, "Record wall time");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (fit->parsed()) return cmd_fit(data, tuning, out_path, timing, out);
    if (predict->parsed()) return cmd_predict(model_path, data.data, out_path, out);
    if (path->parsed()) return cmd_path(data, tuning, out_path, coef_path, timing, out);
    if (risk->parsed()) return cmd_risk_curve(spec_path, out_path, empirical_n, n_test, seed, timing, out);
    if (simulate->parsed()) return cmd_simulate(sim, out_path, timing, out);
    if (compare->parsed()) return cmd_compare(data, tuning, methods_text, out_path, timing, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace sigmaridge::cli
