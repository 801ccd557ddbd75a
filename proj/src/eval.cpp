#include "treesmc/eval.hpp"

#include <chrono>
#include <cmath>

namespace treesmc {

nlohmann::json to_json(const EvalReport& r) {
  auto metric = [&](double v) {
    return r.num_test > 0 ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  return {{"mean_log_predictive", metric(r.mean_log_predictive)},
          {"accuracy", metric(r.accuracy)},
          {"log_marginal", std::isfinite(r.log_marginal) ? nlohmann::json(r.log_marginal)
                                                         : nlohmann::json(nullptr)},
          {"train_seconds", r.train_seconds},
          {"predict_seconds", r.predict_seconds},
          {"num_test", r.num_test},
          {"config", r.config}};
}

std::size_t argmax_class(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

EvalReport evaluate(const std::vector<std::vector<double>>& predictions, const Dataset& test) {
  if (predictions.size() != test.size()) {
    throw DataError("evaluate: one prediction per test point required");
  }
  EvalReport r;
  r.num_test = test.size();
  double log_p = 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const auto& p = predictions[n];
    const std::uint32_t y = test.label(n);
    log_p += std::log(p.at(y));
    correct += argmax_class(p) == y ? 1 : 0;
  }
  r.mean_log_predictive = log_p / static_cast<double>(test.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return r;
}

EvalReport evaluate(const Predictor& predictor, const Dataset& test) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<double>> predictions;
  predictions.reserve(test.size());
  for (std::size_t n = 0; n < test.size(); ++n) predictions.push_back(predictor(test.row(n)));
  EvalReport r = evaluate(predictions, test);
  r.predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace treesmc
