#include "treesmc/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace treesmc {

void Hyperparams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("alpha must be positive, got " + std::to_string(alpha));
  }
  if (!(alpha_split > 0.0 && alpha_split < 1.0)) {
    throw ParameterError("alpha_split must lie in (0, 1), got " + std::to_string(alpha_split));
  }
  if (!(beta_split >= 0.0) || !std::isfinite(beta_split)) {
    throw ParameterError("beta_split must be non-negative, got " + std::to_string(beta_split));
  }
}

double dm_log_lik(std::span<const std::int64_t> counts, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (counts.empty()) throw ParameterError("class count vector is empty");
  const double k = static_cast<double>(counts.size());
  const double a = alpha / k;
  std::int64_t total = 0;
  double sum = 0.0;
  const double lg_a = boost::math::lgamma(a);
  for (std::int64_t m : counts) {
    if (m < 0) throw ParameterError("class counts must be non-negative");
    if (m == 0) continue;
    total += m;
    sum += boost::math::lgamma(static_cast<double>(m) + a) - lg_a;
  }
  if (total == 0) return 0.0;
  return sum + boost::math::lgamma(alpha) - boost::math::lgamma(static_cast<double>(total) + alpha);
}

double split_prob(std::size_t depth, double alpha_split, double beta_split) {
  Hyperparams{1.0, alpha_split, beta_split}.validate();
  return alpha_split / std::pow(1.0 + static_cast<double>(depth), beta_split);
}

std::vector<double> leaf_predictive(std::span<const std::int64_t> counts, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (counts.empty()) throw ParameterError("class count vector is empty");
  const double a = alpha / static_cast<double>(counts.size());
  double total = 0.0;
  for (std::int64_t m : counts) {
    if (m < 0) throw ParameterError("class counts must be non-negative");
    total += static_cast<double>(m);
  }
  std::vector<double> p(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    p[k] = (static_cast<double>(counts[k]) + a) / (total + alpha);
  }
  return p;
}

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return kNegInf;
  const double hi = *std::max_element(values.begin(), values.end());
  if (hi == kNegInf) return kNegInf;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

}  // namespace treesmc
