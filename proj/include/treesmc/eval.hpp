#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "treesmc/dataset.hpp"

namespace treesmc {

struct EvalReport {
  double mean_log_predictive = 0.0;  // mean over test points of log p(y | x)
  double accuracy = 0.0;
  double log_marginal = 0.0;  // of the training labels, when the method provides one
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  std::size_t num_test = 0;
  nlohmann::json config;
};

nlohmann::json to_json(const EvalReport& r);

using Predictor = std::function<std::vector<double>(std::span<const double>)>;

// Index of the largest probability; ties go to the smaller class id.
std::size_t argmax_class(std::span<const double> probs);

// Fills mean_log_predictive, accuracy, num_test and predict_seconds.
EvalReport evaluate(const Predictor& predictor, const Dataset& test);

// Same, for predictions already computed (one row per test point).
EvalReport evaluate(const std::vector<std::vector<double>>& predictions, const Dataset& test);

}  // namespace treesmc
