#include "treesmc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace treesmc {

Dataset::Dataset(std::size_t num_features, std::vector<double> features,
                 std::vector<std::uint32_t> labels, std::size_t num_classes,
                 std::vector<std::string> label_names)
    : num_features_(num_features),
      num_classes_(num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      label_names_(std::move(label_names)) {
  if (num_features_ == 0) throw DataError("dataset needs at least one feature");
  if (labels_.empty()) throw DataError("dataset needs at least one row");
  if (num_classes_ < 2) throw DataError("dataset needs at least two classes");
  if (features_.size() != labels_.size() * num_features_) {
    throw DataError("feature matrix has " + std::to_string(features_.size()) +
                    " values, expected " + std::to_string(labels_.size() * num_features_));
  }
  if (!label_names_.empty() && label_names_.size() != num_classes_) {
    throw DataError("label_names must have one entry per class");
  }
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] >= num_classes_) {
      throw DataError("row " + std::to_string(n) + ": label " + std::to_string(labels_[n]) +
                      " outside [0, " + std::to_string(num_classes_) + ")");
    }
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i])) {
      throw DataError("row " + std::to_string(i / num_features_) + ", column " +
                      std::to_string(i % num_features_) + ": non-finite feature value");
    }
  }

  unique_values_.resize(num_features_);
  for (std::size_t d = 0; d < num_features_; ++d) {
    auto& u = unique_values_[d];
    u.reserve(size());
    for (std::size_t n = 0; n < size(); ++n) u.push_back(feature(n, d));
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    u.shrink_to_fit();
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> x;
  std::vector<std::uint32_t> y;
  x.reserve(rows.size() * num_features_);
  y.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw DataError("subset row " + std::to_string(r) + " out of range");
    auto src = row(r);
    x.insert(x.end(), src.begin(), src.end());
    y.push_back(labels_[r]);
  }
  return Dataset(num_features_, std::move(x), std::move(y), num_classes_, label_names_);
}

}  // namespace treesmc
