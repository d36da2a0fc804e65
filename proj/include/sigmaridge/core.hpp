#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sigmaridge/error.hpp"

namespace sigmaridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Partition of the feature columns {0..p-1} into K groups.
///
/// Groups are numbered 0..K-1. Column order inside a group follows the column
/// order of the design.
class GroupLayout {
 public:
  GroupLayout() = default;

  /// `membership[j]` is the group of column j; `labels[g]` names group g.
  /// Throws LayoutError unless every group id in 0..K-1 owns at least one
  /// column, where K = labels.size().
  GroupLayout(std::vector<std::size_t> membership,
              std::vector<std::string> labels);

  /// K consecutive groups of the given sizes, labelled "g1".."gK".
  static GroupLayout contiguous(std::span<const std::size_t> sizes);

  std::size_t num_groups() const noexcept { return labels_.size(); }
  std::size_t num_features() const noexcept { return membership_.size(); }

  std::size_t group_of(std::size_t column) const { return membership_.at(column); }
  std::size_t size(std::size_t group) const { return sizes_.at(group); }

  const std::vector<std::size_t>& membership() const noexcept { return membership_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Column indices of `group`, ascending.
  const std::vector<std::size_t>& columns(std::size_t group) const {
    return columns_.at(group);
  }

  friend bool operator==(const GroupLayout& a, const GroupLayout& b) {
    return a.membership_ == b.membership_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::size_t> membership_;
  std::vector<std::string> labels_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<std::size_t>> columns_;
};

/// Builds a layout from a per-column group label.
///
/// Group order is the order of `declared_labels` when given (the manifest
/// order), otherwise first appearance in `column_groups`. A declared label
/// that owns no column is a LayoutError, as is a column label missing from
/// `declared_labels`.
GroupLayout build_layout(std::span<const std::string> column_groups,
                         std::span<const std::string> declared_labels = {});

/// Per-group penalties lambda_g in (0, inf]. An infinite entry drops the
/// group from the fit.
class RegVector {
 public:
  RegVector() = default;
  explicit RegVector(Vector values);
  RegVector(std::initializer_list<double> values);

  static RegVector uniform(std::size_t num_groups, double lambda);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t g) const { return values_(static_cast<Eigen::Index>(g)); }
  const Vector& values() const noexcept { return values_; }

  bool is_dropped(std::size_t g) const { return (*this)[g] == kInf; }
  bool all_dropped() const;

  friend bool operator==(const RegVector& a, const RegVector& b) {
    return a.values_.size() == b.values_.size() && (a.values_.array() == b.values_.array()).all();
  }

 private:
  Vector values_;
};

/// lambda expanded to the p-length diagonal of the penalty matrix.
Vector expand_diagonal(const RegVector& lambda, const GroupLayout& layout);

/// Training data: n x p design, length-n response and the feature partition.
struct GroupedDesign {
  Matrix X;
  Vector Y;
  GroupLayout layout;

  GroupedDesign() = default;
  /// Validates shapes, finiteness and the layout.
  GroupedDesign(Matrix x, Vector y, GroupLayout layout);

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index p() const noexcept { return X.cols(); }
};

/// Affine maps taking raw features/response to mean 0, variance 1
/// (sample variance with denominator n-1).
struct StandardizationState {
  Vector feature_means;
  Vector feature_scales;
  double response_mean = 0.0;
  double response_scale = 1.0;

  Matrix transform_features(const Matrix& x) const;
  Vector transform_response(const Vector& y) const;
  /// Maps a prediction on the standardized scale back to the response scale.
  Vector inverse_response(const Vector& y_std) const;

  /// Coefficients on the raw scale for a standardized-scale fit, and the
  /// matching intercept.
  Vector raw_coefficients(const Vector& coef_std) const;
  double raw_intercept(const Vector& coef_std) const;
};

std::pair<GroupedDesign, StandardizationState> standardize(const GroupedDesign& design);

}  // namespace sigmaridge
