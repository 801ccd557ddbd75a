#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "treesmc/dataset.hpp"

namespace testing_util {

// Dirichlet-Multinomial likelihood as a ratio of rising factorials:
//   prod_k (a)^(m_k) / (alpha)^(n),  a = alpha / K.
inline double dm_rising(const std::vector<std::int64_t>& counts, double alpha) {
  const double a = alpha / static_cast<double>(counts.size());
  double log_num = 0.0;
  std::int64_t n = 0;
  for (std::int64_t m : counts) {
    for (std::int64_t j = 0; j < m; ++j) log_num += std::log(a + static_cast<double>(j));
    n += m;
  }
  double log_den = 0.0;
  for (std::int64_t j = 0; j < n; ++j) log_den += std::log(alpha + static_cast<double>(j));
  return log_num - log_den;
}

inline treesmc::Dataset make_dataset(std::size_t d, std::vector<double> x,
                                     std::vector<std::uint32_t> y, std::size_t k = 2) {
  return treesmc::Dataset(d, std::move(x), std::move(y), k);
}

// Random instance with values on a 1/grid lattice.
inline treesmc::Dataset random_dataset(std::size_t n, std::size_t d, std::size_t k,
                                       std::uint64_t seed, int grid = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(0, grid - 1);
  std::uniform_int_distribution<std::uint32_t> c(0, static_cast<std::uint32_t>(k - 1));
  std::vector<double> x(n * d);
  for (double& xi : x) xi = v(rng) / static_cast<double>(grid);
  std::vector<std::uint32_t> y(n);
  for (auto& yi : y) yi = c(rng);
  return treesmc::Dataset(d, std::move(x), std::move(y), k);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("treesmc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_util
