#include "sigmaridge/core.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace sigmaridge {

GroupLayout::GroupLayout(std::vector<std::size_t> membership,
                         std::vector<std::string> labels)
    : membership_(std::move(membership)), labels_(std::move(labels)) {
  if (membership_.empty()) throw LayoutError("layout has no columns");
  if (labels_.empty()) throw LayoutError("layout has no groups");
  const std::size_t k = labels_.size();
  sizes_.assign(k, 0);
  columns_.assign(k, {});
  for (std::size_t j = 0; j < membership_.size(); ++j) {
    const std::size_t g = membership_[j];
    if (g >= k) {
      throw LayoutError("column " + std::to_string(j) + " maps to unknown group id " +
                        std::to_string(g));
    }
    ++sizes_[g];
    columns_[g].push_back(j);
  }
  for (std::size_t g = 0; g < k; ++g) {
    if (sizes_[g] == 0) throw LayoutError("group '" + labels_[g] + "' has no columns");
  }
}

GroupLayout GroupLayout::contiguous(std::span<const std::size_t> sizes) {
  std::vector<std::size_t> membership;
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    membership.insert(membership.end(), sizes[g], g);
    labels.push_back("g" + std::to_string(g + 1));
  }
  return GroupLayout(std::move(membership), std::move(labels));
}

GroupLayout build_layout(std::span<const std::string> column_groups,
                         std::span<const std::string> declared_labels) {
  std::map<std::string, std::size_t> index;
  std::vector<std::string> labels;
  for (const auto& label : declared_labels) {
    if (index.emplace(label, labels.size()).second) labels.push_back(label);
  }
  const bool closed = !declared_labels.empty();

  std::vector<std::size_t> membership;
  membership.reserve(column_groups.size());
  for (std::size_t j = 0; j < column_groups.size(); ++j) {
    const auto& label = column_groups[j];
    auto it = index.find(label);
    if (it == index.end()) {
      if (closed) {
        throw LayoutError("column " + std::to_string(j) + " has undeclared group '" + label + "'");
      }
      it = index.emplace(label, labels.size()).first;
      labels.push_back(label);
    }
    membership.push_back(it->second);
  }
  return GroupLayout(std::move(membership), std::move(labels));
}

RegVector::RegVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw ValidationError("empty regularization vector");
  for (Eigen::Index g = 0; g < values_.size(); ++g) {
    const double v = values_(g);
    if (std::isnan(v) || v <= 0.0 || v == -kInf) {
      std::ostringstream msg;
      msg << "lambda[" << g << "] = " << v << " is not in (0, inf]";
      throw ValidationError(msg.str());
    }
  }
}

RegVector::RegVector(std::initializer_list<double> values)
    : RegVector(Vector(Eigen::Map<const Vector>(values.begin(),
                                                static_cast<Eigen::Index>(values.size())))) {}

RegVector RegVector::uniform(std::size_t num_groups, double lambda) {
  return RegVector(Vector::Constant(static_cast<Eigen::Index>(num_groups), lambda));
}

bool RegVector::all_dropped() const { return (values_.array() == kInf).all(); }

Vector expand_diagonal(const RegVector& lambda, const GroupLayout& layout) {
  if (lambda.size() != layout.num_groups()) {
    throw ValidationError("lambda has " + std::to_string(lambda.size()) + " entries but layout has " +
                          std::to_string(layout.num_groups()) + " groups");
  }
  Vector diag(static_cast<Eigen::Index>(layout.num_features()));
  for (std::size_t j = 0; j < layout.num_features(); ++j) {
    diag(static_cast<Eigen::Index>(j)) = lambda[layout.group_of(j)];
  }
  return diag;
}

GroupedDesign::GroupedDesign(Matrix x, Vector y, GroupLayout lay)
    : X(std::move(x)), Y(std::move(y)), layout(std::move(lay)) {
  if (X.rows() < 1 || X.cols() < 1) throw ValidationError("design must have n >= 1 and p >= 1");
  if (Y.size() != X.rows()) {
    throw ValidationError("response length " + std::to_string(Y.size()) + " != rows " +
                          std::to_string(X.rows()));
  }
  if (layout.num_features() != static_cast<std::size_t>(X.cols())) {
    throw LayoutError("layout covers " + std::to_string(layout.num_features()) +
                      " columns but design has " + std::to_string(X.cols()));
  }
  if (!X.allFinite()) throw ValidationError("design matrix has non-finite entries");
  if (!Y.allFinite()) throw ValidationError("response has non-finite entries");
}

Matrix StandardizationState::transform_features(const Matrix& x) const {
  return (x.rowwise() - feature_means.transpose()).array().rowwise() /
         feature_scales.transpose().array();
}

Vector StandardizationState::transform_response(const Vector& y) const {
  return (y.array() - response_mean) / response_scale;
}

Vector StandardizationState::inverse_response(const Vector& y_std) const {
  return (y_std.array() * response_scale + response_mean).matrix();
}

Vector StandardizationState::raw_coefficients(const Vector& coef_std) const {
  return (coef_std.array() * response_scale / feature_scales.array()).matrix();
}

double StandardizationState::raw_intercept(const Vector& coef_std) const {
  return response_mean - raw_coefficients(coef_std).dot(feature_means);
}

namespace {

std::pair<double, double> mean_and_sd(const Eigen::Ref<const Vector>& v) {
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::pair<GroupedDesign, StandardizationState> standardize(const GroupedDesign& design) {
  const Eigen::Index n = design.n();
  if (n < 2) throw ValidationError("standardization needs n >= 2");

  StandardizationState state;
  state.feature_means.resize(design.p());
  state.feature_scales.resize(design.p());
  for (Eigen::Index j = 0; j < design.p(); ++j) {
    const auto [mean, sd] = mean_and_sd(design.X.col(j));
    // Relative threshold: a column equal up to rounding is constant.
    if (!(sd > 1e-14 * std::max(1.0, std::abs(mean)))) {
      throw ConstantColumnError(static_cast<std::size_t>(j),
                                "column " + std::to_string(j) + " has zero variance");
    }
    state.feature_means(j) = mean;
    state.feature_scales(j) = sd;
  }
  const auto [ymean, ysd] = mean_and_sd(design.Y);
  if (!(ysd > 1e-14 * std::max(1.0, std::abs(ymean)))) {
    throw ConstantColumnError(ConstantColumnError::kResponse, "response has zero variance");
  }
  state.response_mean = ymean;
  state.response_scale = ysd;

  GroupedDesign out(state.transform_features(design.X), state.transform_response(design.Y),
                    design.layout);
  return {std::move(out), std::move(state)};
}

}  // namespace sigmaridge
