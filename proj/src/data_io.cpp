#include "treesmc/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string_view>

#include "treesmc/random.hpp"

namespace treesmc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string where(const std::filesystem::path& path, std::size_t line, std::size_t column) {
  return path.string() + ": row " + std::to_string(line) + ", column " + std::to_string(column + 1);
}

}  // namespace

Dataset load_csv(const CsvSpec& spec, const std::vector<std::string>& label_names) {
  std::ifstream in(spec.path);
  if (!in) throw DataError("cannot open " + spec.path.string());

  std::vector<double> features;
  std::vector<std::string> raw_labels;
  std::size_t columns = 0;
  std::size_t label_col = 0;
  std::string line;
  std::size_t line_no = 0;
  bool skip_header = spec.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    const auto fields = split_fields(line, spec.delimiter);
    if (columns == 0) {
      columns = fields.size();
      if (columns < 2) throw DataError(spec.path.string() + ": need at least two columns");
      const long col = spec.label_column < 0 ? static_cast<long>(columns) + spec.label_column
                                             : spec.label_column;
      if (col < 0 || col >= static_cast<long>(columns)) {
        throw DataError(spec.path.string() + ": label column " + std::to_string(spec.label_column) +
                        " out of range for " + std::to_string(columns) + " columns");
      }
      label_col = static_cast<std::size_t>(col);
    }
    if (fields.size() != columns) {
      throw DataError(spec.path.string() + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " columns, expected " + std::to_string(columns));
    }
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == label_col) {
        if (fields[c].empty()) throw DataError(where(spec.path, line_no, c) + ": missing label");
        raw_labels.emplace_back(fields[c]);
        continue;
      }
      double v;
      if (fields[c].empty() || fields[c] == "?") {
        throw DataError(where(spec.path, line_no, c) + ": missing value");
      }
      if (!parse_double(fields[c], v)) {
        throw DataError(where(spec.path, line_no, c) + ": non-numeric value '" +
                        std::string(fields[c]) + "'");
      }
      if (!std::isfinite(v)) throw DataError(where(spec.path, line_no, c) + ": non-finite value");
      features.push_back(v);
    }
  }
  if (raw_labels.empty()) throw DataError(spec.path.string() + ": no data rows");

  std::vector<std::string> names = label_names;
  if (names.empty()) {
    names = raw_labels;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::vector<double> numeric(names.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < names.size() && all_numeric; ++i) {
      all_numeric = parse_double(names[i], numeric[i]);
    }
    if (all_numeric) {
      std::vector<std::size_t> order(names.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return numeric[a] < numeric[b]; });
      std::vector<std::string> sorted;
      for (std::size_t i : order) sorted.push_back(names[i]);
      names = std::move(sorted);
    }
    if (names.size() < 2) {
      throw DataError(spec.path.string() + ": labels take a single value; need at least two classes");
    }
  }
  std::map<std::string, std::uint32_t> ids;
  for (std::size_t i = 0; i < names.size(); ++i) ids.emplace(names[i], static_cast<std::uint32_t>(i));
  std::vector<std::uint32_t> labels;
  labels.reserve(raw_labels.size());
  for (std::size_t n = 0; n < raw_labels.size(); ++n) {
    auto it = ids.find(raw_labels[n]);
    if (it == ids.end()) {
      throw DataError(spec.path.string() + ": data row " + std::to_string(n + 1) + ": label '" +
                      raw_labels[n] + "' not among the training classes");
    }
    labels.push_back(it->second);
  }
  const std::size_t k = names.size();
  return Dataset(columns - 1, std::move(features), std::move(labels), k, std::move(names));
}

TrainTest split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("split fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(data.size()) - 1e-9));
  if (n_train == 0 || n_train >= data.size()) {
    throw DataError("split of " + std::to_string(data.size()) + " rows at fraction " +
                    std::to_string(fraction) + " leaves an empty side");
  }
  std::vector<std::size_t> tr(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> te(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  Dataset train = data.subset(tr);
  Dataset test = data.subset(te);
  return {std::move(train), std::move(test), std::move(tr), std::move(te)};
}

namespace synthetic {

Dataset madelon_like(std::size_t n, std::size_t informative, std::size_t redundant,
                     std::size_t noise, std::uint64_t seed, double label_noise) {
  if (informative == 0 || informative > 20) throw DataError("informative dims must be in [1, 20]");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> vertex(0, (1u << informative) - 1);
  std::bernoulli_distribution flip(label_noise);

  std::vector<std::vector<double>> mix(redundant, std::vector<double>(informative));
  for (auto& row : mix) {
    for (double& c : row) c = coef(rng);
  }
  const std::size_t dims = informative + redundant + noise;
  std::vector<double> x;
  x.reserve(n * dims);
  std::vector<std::uint32_t> y;
  std::vector<double> inf(informative);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t v = vertex(rng);
    int sum = 0;
    for (std::size_t d = 0; d < informative; ++d) {
      const double centre = (v >> d) & 1u ? 1.0 : -1.0;
      sum += centre > 0 ? 1 : -1;
      inf[d] = centre + 0.5 * gauss(rng);
    }
    x.insert(x.end(), inf.begin(), inf.end());
    for (const auto& row : mix) {
      x.push_back(std::inner_product(row.begin(), row.end(), inf.begin(), 0.0));
    }
    for (std::size_t d = 0; d < noise; ++d) x.push_back(gauss(rng));
    std::uint32_t label = sum > 0 ? 1 : 0;
    if (flip(rng)) label = 1 - label;
    y.push_back(label);
  }
  return Dataset(dims, std::move(x), std::move(y), 2);
}

Dataset gaussian_classes(std::size_t n, std::size_t dims, std::size_t classes,
                         std::size_t informative, std::uint64_t seed, int decimals) {
  if (informative > dims) throw DataError("informative dims exceed dims");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(classes - 1));
  std::vector<std::vector<double>> means(classes, std::vector<double>(informative));
  for (auto& m : means) {
    for (double& v : m) v = 2.0 * gauss(rng);
  }
  const double scale = std::pow(10.0, decimals);
  std::vector<double> x;
  x.reserve(n * dims);
  std::vector<std::uint32_t> y;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t k = pick(rng);
    for (std::size_t d = 0; d < dims; ++d) {
      const double v = (d < informative ? means[k][d] : 0.0) + gauss(rng);
      x.push_back(std::round(v * scale) / scale);
    }
    y.push_back(k);
  }
  return Dataset(dims, std::move(x), std::move(y), classes);
}

}  // namespace synthetic

}  // namespace treesmc
