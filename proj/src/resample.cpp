#include "treesmc/resample.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "treesmc/likelihood.hpp"

namespace treesmc {

ResamplerKind parse_resampler(std::string_view name) {
  if (name == "multinomial") return ResamplerKind::multinomial;
  if (name == "systematic") return ResamplerKind::systematic;
  throw std::invalid_argument("unknown resampler '" + std::string(name) + "'");
}

std::string_view to_string(ResamplerKind kind) {
  return kind == ResamplerKind::multinomial ? "multinomial" : "systematic";
}

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw DegeneratePopulationError("NaN log-weight");
  }
  const double total = log_sum_exp(log_weights);
  if (!std::isfinite(total)) {
    throw DegeneratePopulationError("population has no finite log-weight");
  }
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - total);
  return w;
}

double ess(std::span<const double> log_weights) {
  const auto w = normalized_weights(log_weights);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return std::clamp(1.0 / sq, 1.0, static_cast<double>(w.size()));
}

std::vector<std::size_t> resample_multinomial(std::span<const double> weights, std::size_t count,
                                              Rng& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> out(count);
  for (auto& a : out) a = pick(rng);
  return out;
}

std::vector<std::size_t> resample_systematic(std::span<const double> weights, std::size_t count,
                                             double u) {
  if (weights.empty()) throw DegeneratePopulationError("no weights to resample");
  std::vector<std::size_t> out(count);
  double total = 0.0;
  for (double w : weights) total += w;
  std::size_t last = weights.size() - 1;
  while (last > 0 && !(weights[last] > 0.0)) --last;
  std::size_t j = 0;
  double cumulative = weights[0] / total;
  for (std::size_t m = 0; m < count; ++m) {
    const double pos = (u + static_cast<double>(m)) / static_cast<double>(count);
    // Rounding in the running sum must not land on a trailing zero weight.
    while (pos >= cumulative && j < last) cumulative += weights[++j] / total;
    out[m] = j;
  }
  return out;
}

std::vector<std::size_t> resample_systematic(std::span<const double> weights, std::size_t count,
                                             Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  return resample_systematic(weights, count, u01(rng));
}

std::vector<std::size_t> resample(ResamplerKind kind, std::span<const double> weights,
                                  std::size_t count, Rng& rng) {
  return kind == ResamplerKind::multinomial ? resample_multinomial(weights, count, rng)
                                            : resample_systematic(weights, count, rng);
}

}  // namespace treesmc
