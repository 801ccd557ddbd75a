#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "treesmc/likelihood.hpp"
#include "treesmc/mcmc.hpp"
#include "treesmc/smc.hpp"

namespace treesmc {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "TREESMC_OUT_DIR";

// Bad flags or flag combinations; the CLI exits with status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Command { smc, mcmc, oracle, sample_prior };

Command parse_command(std::string_view name);
std::string_view to_string(Command c);

// Fully resolved configuration of one run. Serialized into the manifest; a
// manifest plus the data files reproduces the run.
struct RunSpec {
  Command command = Command::smc;
  std::string data;
  std::string test;  // empty: split `data` with split_frac / split_seed
  int label_col = -1;
  char delimiter = ',';
  bool header = false;
  double split_frac = 0.7;
  std::uint64_t split_seed = 0;

  Hyperparams hyper;
  std::size_t particles = 100;
  std::size_t islands = 1;
  ProposalKind proposal = ProposalKind::prior;
  Expansion expansion = Expansion::node_wise;
  Priority priority = Priority::breadth_first;
  ResamplerKind resampler = ResamplerKind::multinomial;
  double ess_frac = 0.1;
  std::size_t max_stages = 5000;
  std::size_t threads = 1;

  std::size_t iterations = 1000;
  std::size_t burn_in = 0;

  std::size_t max_trees = 1'000'000;
  std::size_t draws = 10'000;

  std::uint64_t seed = 0;
  std::string out_dir;

  SmcConfig smc_config() const;
  McmcConfig mcmc_config() const;
  // Throws UsageError.
  void validate() const;
};

nlohmann::json to_json(const RunSpec& spec);
// Keys absent from `j` keep their value from `base`. Unknown keys are a UsageError.
RunSpec run_spec_from_json(const nlohmann::json& j, const RunSpec& base = {});

struct RunOutcome {
  nlohmann::json report;
  nlohmann::json manifest;
  std::string diagnostics_csv;
};

// Loads data, runs the command and evaluates it. Does not touch the filesystem
// beyond reading the data files.
RunOutcome execute(const RunSpec& spec);

// Writes report.json, diagnostics.csv and manifest.json into `dir`, each via a
// temporary file renamed into place.
void write_artifacts(const RunOutcome& outcome, const std::filesystem::path& dir);

// Metric fields of a report (everything but timings), for determinism checks.
nlohmann::json metric_fields(const nlohmann::json& report);

// Runs every entry of a grid file (a JSON array of RunSpec overrides, or an
// object with such an array under "runs") on top of `base`, writing each run's
// artifacts under <out>/runs/<hash>/ and appending one row per run to
// <out>/results.csv. A failing entry is recorded in its row and the sweep
// continues. Returns the number of failed entries.
std::size_t run_sweep(const std::filesystem::path& grid, const RunSpec& base,
                      const std::filesystem::path& out);

// Short stable hash of a spec's JSON, used to name sweep runs.
std::string config_hash(const RunSpec& spec);

}  // namespace treesmc
