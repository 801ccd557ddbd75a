#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "treesmc/dataset.hpp"

namespace treesmc {

struct CsvSpec {
  std::filesystem::path path;
  int label_column = -1;  // negative values count from the last column
  char delimiter = ',';
  bool header = false;
};

// Numeric feature columns plus one label column. Labels are remapped to dense
// ids; the original strings are kept in label_names(), ordered numerically if
// every label is a number, lexicographically otherwise. With `label_names`
// given, labels are mapped onto that list instead (used for a test file that
// must share the training set's classes).
Dataset load_csv(const CsvSpec& spec, const std::vector<std::string>& label_names = {});

struct TrainTest {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// Seeded uniform permutation; the first ceil(fraction * N) rows train.
TrainTest split(const Dataset& data, double fraction, std::uint64_t seed);

namespace synthetic {

// Madelon-style two-class data: Gaussian clusters on the vertices of a
// hypercube spanned by the informative dimensions (a vertex's class is the sign
// of its coordinate sum), redundant dimensions that are random linear
// combinations of the informative ones, and pure-noise dimensions.
Dataset madelon_like(std::size_t n, std::size_t informative, std::size_t redundant,
                     std::size_t noise, std::uint64_t seed, double label_noise = 0.05);

// K Gaussian classes whose means differ on the first `informative` dimensions;
// the rest are noise. Values are rounded to `decimals` places.
Dataset gaussian_classes(std::size_t n, std::size_t dims, std::size_t classes,
                         std::size_t informative, std::uint64_t seed, int decimals = 2);

}  // namespace synthetic

}  // namespace treesmc
