#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treesmc {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable labelled design matrix. Features are row-major, labels are dense
// class ids in [0, num_classes). label_names maps a class id back to the label
// as it appeared in the source file (empty for synthetic data).
class Dataset {
 public:
  Dataset(std::size_t num_features, std::vector<double> features,
          std::vector<std::uint32_t> labels, std::size_t num_classes,
          std::vector<std::string> label_names = {});

  std::size_t size() const { return labels_.size(); }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }

  double feature(std::size_t row, std::size_t dim) const {
    return features_[row * num_features_ + dim];
  }
  std::span<const double> row(std::size_t row) const {
    return {features_.data() + row * num_features_, num_features_};
  }
  std::uint32_t label(std::size_t row) const { return labels_[row]; }
  std::span<const std::uint32_t> labels() const { return labels_; }
  std::span<const double> features() const { return features_; }

  // Strictly increasing distinct values of column `dim`.
  std::span<const double> unique_values(std::size_t dim) const { return unique_values_[dim]; }

  const std::vector<std::string>& label_names() const { return label_names_; }

  // Rows in the given order; class count and label names carry over.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t num_features_;
  std::size_t num_classes_;
  std::vector<double> features_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::vector<double>> unique_values_;
  std::vector<std::string> label_names_;
};

}  // namespace treesmc
