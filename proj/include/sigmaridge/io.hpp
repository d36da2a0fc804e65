#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sigmaridge/core.hpp"

namespace sigmaridge::io {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal; infinities as "inf"/"-inf", NaN as "nan".
std::string format_double(double value);
/// Accepts anything strtod-style plus "inf"/"-inf"/"nan". Throws
/// ValidationError naming `context` on failure.
double parse_double(std::string_view text, const std::string& context);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

std::vector<std::string> split_csv_line(std::string_view line);

/// Numeric CSV: one header line, then rows of numbers. Lines starting with
/// '#' and blank lines are skipped.
struct NumericTable {
  std::vector<std::string> header;
  Matrix values;

  /// Index of `name` in the header; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
};

NumericTable read_numeric_csv(const std::string& path);

/// Group manifest with header `feature,group`; order of first appearance of
/// each group fixes the group order.
std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path);

std::string read_text_file(const std::string& path);
/// Writes `content` to `path`, or to stdout when `path` is "-".
void write_text_file(const std::string& path, const std::string& content);

/// Leading `# key: value` lines carried by every output file.
struct ReproHeader {
  std::string command;
  std::uint64_t seed = 0;
  /// Canonical rendering of every setting that affects the output.
  std::vector<std::pair<std::string, std::string>> settings;
  /// Rendered after the settings but left out of the hash (timings, warnings).
  std::vector<std::pair<std::string, std::string>> notes;

  std::string canonical_config() const;
  std::uint64_t config_hash() const;
  std::string render_comment_lines() const;
};

/// A fitted model ready for prediction on raw-scale features.
struct FittedModel {
  std::string method;
  std::string response;
  std::vector<std::string> features;
  std::vector<std::string> feature_groups;
  std::vector<std::string> group_labels;
  Vector coef;            // raw scale
  double intercept = 0.0;
  Vector coef_standardized;
  StandardizationState standardization;
  std::optional<double> sigma;
  std::optional<double> sigma_max;
  std::optional<double> lambda_gl;
  Vector lambda;          // per group; may contain inf
  std::optional<double> cv_star;
  std::vector<std::string> warnings;
  ReproHeader header;
  std::string wall_time = "NA";
};

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

}  // namespace sigmaridge::io
