#include "sigmaridge/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace sigmaridge::io {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

double parse_double(std::string_view text, const std::string& context) {
  std::string_view s = trim(text);
  const std::string low = lower(s);
  if (low == "inf" || low == "+inf" || low == "infinity") return kInf;
  if (low == "-inf" || low == "-infinity") return -kInf;
  if (low == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(context + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, value, 16);
  std::string out(buf, res.ptr);
  return std::string(16 - out.size(), '0') + out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.emplace_back(trim(cell));
  return out;
}

std::size_t NumericTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("column '" + name + "' not found in the data header");
  return static_cast<std::size_t>(it - header.begin());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

namespace {

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(number, line);
  }
  return out;
}

}  // namespace

NumericTable read_numeric_csv(const std::string& path) {
  const auto lines = content_lines(path);
  if (lines.empty()) throw ValidationError("'" + path + "' has no header line");
  NumericTable table;
  table.header = split_csv_line(lines.front().second);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].empty()) throw ValidationError(path + ": header column " + std::to_string(c + 1) + " is empty");
    for (std::size_t d = 0; d < c; ++d) {
      if (table.header[d] == table.header[c]) {
        throw ValidationError(path + ": duplicate column '" + table.header[c] + "'");
      }
    }
  }
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  table.values.resize(static_cast<Eigen::Index>(lines.size() - 1), cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [number, text] = lines[r];
    const auto cells = split_csv_line(text);
    if (cells.size() != table.header.size()) {
      throw ValidationError(path + ":" + std::to_string(number) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v =
          parse_double(cells[c], path + ":" + std::to_string(number) + " column '" + table.header[c] + "'");
      if (!std::isfinite(v)) {
        throw ValidationError(path + ":" + std::to_string(number) + " column '" + table.header[c] +
                              "': non-finite value");
      }
      table.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return table;
}

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
  const auto lines = content_lines(path);
  if (lines.empty()) throw ValidationError("'" + path + "' has no header line");
  const auto header = split_csv_line(lines.front().second);
  if (header.size() != 2 || header[0] != "feature" || header[1] != "group") {
    throw ValidationError(path + ": manifest header must be 'feature,group'");
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r].second);
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty()) {
      throw ValidationError(path + ":" + std::to_string(lines[r].first) + ": expected 'feature,group'");
    }
    for (const auto& [f, g] : out) {
      if (f == cells[0]) throw ValidationError(path + ": feature '" + f + "' listed twice");
    }
    out.emplace_back(cells[0], cells[1]);
  }
  if (out.empty()) throw ValidationError(path + ": manifest lists no features");
  return out;
}

std::string ReproHeader::canonical_config() const {
  std::string out = "command=" + command + ";seed=" + std::to_string(seed);
  for (const auto& [k, v] : settings) out += ";" + k + "=" + v;
  return out;
}

std::uint64_t ReproHeader::config_hash() const { return fnv1a64(canonical_config()); }

std::string ReproHeader::render_comment_lines() const {
  std::string out;
  out += "# sigmaridge " + std::string(kVersion) + "\n";
  out += "# command: " + command + "\n";
  out += "# seed: " + std::to_string(seed) + "\n";
  out += "# config_hash: " + hex64(config_hash()) + "\n";
  for (const auto& [k, v] : settings) out += "# " + k + ": " + v + "\n";
  for (const auto& [k, v] : notes) out += "# " + k + ": " + v + "\n";
  return out;
}

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double read_number(const json& j, const std::string& context) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>(), context);
  throw ValidationError(context + ": expected a number");
}

}  // namespace

std::string model_to_json(const FittedModel& m) {
  json j;
  j["format"] = "sigmaridge-model";
  json repro;
  repro["version"] = kVersion;
  repro["command"] = m.header.command;
  repro["seed"] = m.header.seed;
  repro["config_hash"] = hex64(m.header.config_hash());
  json settings = json::array();
  for (const auto& [k, v] : m.header.settings) settings.push_back({k, v});
  repro["settings"] = settings;
  j["reproducibility"] = repro;
  j["method"] = m.method;
  j["response"] = m.response;

  json features = json::array();
  for (std::size_t i = 0; i < m.features.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    features.push_back({{"name", m.features[i]},
                        {"group", m.feature_groups[i]},
                        {"coef", number(m.coef(e))},
                        {"coef_standardized", number(m.coef_standardized(e))},
                        {"mean", number(m.standardization.feature_means(e))},
                        {"scale", number(m.standardization.feature_scales(e))}});
  }
  j["features"] = features;

  json groups = json::array();
  for (std::size_t g = 0; g < m.group_labels.size(); ++g) {
    groups.push_back({{"label", m.group_labels[g]}, {"lambda", number(m.lambda(static_cast<Eigen::Index>(g)))}});
  }
  j["groups"] = groups;
  j["intercept"] = number(m.intercept);
  j["response_mean"] = number(m.standardization.response_mean);
  j["response_scale"] = number(m.standardization.response_scale);

  json tuning = json::object();
  if (m.sigma) tuning["sigma"] = number(*m.sigma);
  if (m.sigma_max) tuning["sigma_max"] = number(*m.sigma_max);
  if (m.lambda_gl) tuning["lambda_gl"] = number(*m.lambda_gl);
  if (m.cv_star) tuning["cv_star"] = number(*m.cv_star);
  j["tuning"] = tuning;
  j["warnings"] = m.warnings;
  j["wall_time"] = m.wall_time;
  return j.dump(2) + "\n";
}

FittedModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "sigmaridge-model") throw ValidationError("not a sigmaridge model file");
    FittedModel m;
    const auto& repro = j.at("reproducibility");
    m.header.command = repro.at("command").get<std::string>();
    m.header.seed = repro.at("seed").get<std::uint64_t>();
    for (const auto& kv : repro.at("settings")) {
      m.header.settings.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    }
    m.method = j.at("method").get<std::string>();
    m.response = j.at("response").get<std::string>();
    const auto& features = j.at("features");
    const auto p = static_cast<Eigen::Index>(features.size());
    m.coef.resize(p);
    m.coef_standardized.resize(p);
    m.standardization.feature_means.resize(p);
    m.standardization.feature_scales.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto& f = features.at(static_cast<std::size_t>(i));
      m.features.push_back(f.at("name").get<std::string>());
      m.feature_groups.push_back(f.at("group").get<std::string>());
      m.coef(i) = read_number(f.at("coef"), "coef");
      m.coef_standardized(i) = read_number(f.at("coef_standardized"), "coef_standardized");
      m.standardization.feature_means(i) = read_number(f.at("mean"), "mean");
      m.standardization.feature_scales(i) = read_number(f.at("scale"), "scale");
    }
    const auto& groups = j.at("groups");
    m.lambda.resize(static_cast<Eigen::Index>(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      m.group_labels.push_back(groups[g].at("label").get<std::string>());
      m.lambda(static_cast<Eigen::Index>(g)) = read_number(groups[g].at("lambda"), "lambda");
    }
    m.intercept = read_number(j.at("intercept"), "intercept");
    m.standardization.response_mean = read_number(j.at("response_mean"), "response_mean");
    m.standardization.response_scale = read_number(j.at("response_scale"), "response_scale");
    const auto& tuning = j.at("tuning");
    if (tuning.contains("sigma")) m.sigma = read_number(tuning["sigma"], "sigma");
    if (tuning.contains("sigma_max")) m.sigma_max = read_number(tuning["sigma_max"], "sigma_max");
    if (tuning.contains("lambda_gl")) m.lambda_gl = read_number(tuning["lambda_gl"], "lambda_gl");
    if (tuning.contains("cv_star")) m.cv_star = read_number(tuning["cv_star"], "cv_star");
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.wall_time = j.value("wall_time", "NA");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace sigmaridge::io
