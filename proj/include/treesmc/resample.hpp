#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "treesmc/random.hpp"

namespace treesmc {

class DegeneratePopulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ResamplerKind { multinomial, systematic };

ResamplerKind parse_resampler(std::string_view name);
std::string_view to_string(ResamplerKind kind);

// Normalized weights exp(lw - logsumexp(lw)). Throws DegeneratePopulationError
// if every log-weight is -inf or any is NaN.
std::vector<double> normalized_weights(std::span<const double> log_weights);

// Effective sample size 1 / sum(wbar^2), in [1, M].
double ess(std::span<const double> log_weights);

// `count` i.i.d. categorical ancestor draws.
std::vector<std::size_t> resample_multinomial(std::span<const double> weights, std::size_t count,
                                              Rng& rng);

// Ancestors at positions (u + m) / count against the cumulative weights, for a
// single offset u in [0, 1).
std::vector<std::size_t> resample_systematic(std::span<const double> weights, std::size_t count,
                                             double u);
std::vector<std::size_t> resample_systematic(std::span<const double> weights, std::size_t count,
                                             Rng& rng);

std::vector<std::size_t> resample(ResamplerKind kind, std::span<const double> weights,
                                  std::size_t count, Rng& rng);

}  // namespace treesmc
