#pragma once

#include <cstdint>
#include <random>

namespace treesmc {

using Rng = std::mt19937_64;

// Mixes a master seed with a stream index through std::seed_seq. Used for
// island seeds and for the per-run seeds of a sweep.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace treesmc
