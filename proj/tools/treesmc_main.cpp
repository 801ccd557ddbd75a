#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "treesmc/dataset.hpp"
#include "treesmc/oracle.hpp"
#include "treesmc/runner.hpp"

namespace {

using treesmc::RunSpec;

struct Flags {
  RunSpec spec;
  std::string proposal = "prior";
  std::string expansion = "node";
  std::string priority = "breadth";
  std::string resampler = "multinomial";
  std::string delimiter = ",";
};

void add_common(CLI::App* app, Flags& f) {
  RunSpec& s = f.spec;
  app->add_option("--data", s.data, "Training CSV (numeric features plus a label column)");
  app->add_option("--label-col", s.label_col, "Label column index; negative counts from the end")
      ->capture_default_str();
  app->add_option("--delimiter", f.delimiter, "Field delimiter")->capture_default_str();
  app->add_flag("--header", s.header, "Skip the first line of each CSV");
  app->add_option("--alpha", s.hyper.alpha, "Dirichlet concentration")->capture_default_str();
  app->add_option("--alpha-split", s.hyper.alpha_split, "Split-probability scale")
      ->capture_default_str();
  app->add_option("--beta-split", s.hyper.beta_split, "Split-probability depth decay")
      ->capture_default_str();
  app->add_option("--seed", s.seed, "Master seed")->capture_default_str();
  app->add_option("--out-dir", s.out_dir, "Output directory");
}

void add_eval(CLI::App* app, Flags& f) {
  RunSpec& s = f.spec;
  app->add_option("--test", s.test, "Test CSV; without it --data is split");
  app->add_option("--split-frac", s.split_frac, "Training fraction of --data")
      ->capture_default_str();
  app->add_option("--split-seed", s.split_seed, "Seed of the train/test permutation")
      ->capture_default_str();
}

void add_smc(CLI::App* app, Flags& f) {
  RunSpec& s = f.spec;
  app->add_option("--particles", s.particles, "Total particles M")->capture_default_str();
  app->add_option("--islands", s.islands, "Independent islands; must divide M")
      ->capture_default_str();
  app->add_option("--proposal", f.proposal, "Proposal kernel")
      ->check(CLI::IsMember({"prior", "empirical", "optimal"}))
      ->capture_default_str();
  app->add_option("--expansion", f.expansion, "Node-wise or layer-wise expansion")
      ->check(CLI::IsMember({"node", "layer"}))
      ->capture_default_str();
  app->add_option("--priority", f.priority, "Node-wise candidate order")
      ->check(CLI::IsMember({"breadth", "marginal"}))
      ->capture_default_str();
  app->add_option("--resampler", f.resampler, "Resampling scheme")
      ->check(CLI::IsMember({"multinomial", "systematic"}))
      ->capture_default_str();
  app->add_option("--ess-frac", s.ess_frac, "Resample when ESS < ess-frac * M")
      ->capture_default_str();
  app->add_option("--max-stages", s.max_stages, "Stage limit")->capture_default_str();
  app->add_option("--threads", s.threads, "Threads used for islands")->capture_default_str();
}

void add_mcmc(CLI::App* app, Flags& f) {
  RunSpec& s = f.spec;
  app->add_option("--iterations", s.iterations, "MCMC iterations")->capture_default_str();
  app->add_option("--burn-in", s.burn_in, "Leading states left out of the predictive")
      ->capture_default_str();
}

RunSpec resolve(Flags& f, treesmc::Command command) {
  RunSpec s = f.spec;
  s.command = command;
  s.proposal = treesmc::parse_proposal(f.proposal);
  s.expansion = treesmc::parse_expansion(f.expansion);
  s.priority = treesmc::parse_priority(f.priority);
  s.resampler = treesmc::parse_resampler(f.resampler);
  if (f.delimiter.size() != 1) throw treesmc::UsageError("--delimiter must be one character");
  s.delimiter = f.delimiter[0];
  return s;
}

std::string default_out_dir(const std::string& command) {
  if (const char* env = std::getenv(treesmc::kOutDirEnv); env && *env) {
    return (std::filesystem::path(env) / command).string();
  }
  return (std::filesystem::path("out") / command).string();
}

int run_one(RunSpec spec) {
  if (spec.out_dir.empty()) spec.out_dir = default_out_dir(std::string(to_string(spec.command)));
  treesmc::RunOutcome outcome = treesmc::execute(spec);
  treesmc::write_artifacts(outcome, spec.out_dir);
  nlohmann::json summary = treesmc::metric_fields(outcome.report);
  summary.erase("config");
  std::cout << summary.dump() << "\n";
  std::cerr << "artifacts written to " << spec.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian decision trees by sequential Monte Carlo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(treesmc::kToolVersion));

  Flags smc, mcmc, oracle, prior, sweep, replay;

  auto* smc_cmd = app.add_subcommand("smc", "Top-down SMC over decision trees");
  add_common(smc_cmd, smc);
  add_eval(smc_cmd, smc);
  add_smc(smc_cmd, smc);

  auto* mcmc_cmd = app.add_subcommand("mcmc", "Grow/prune/change/swap Metropolis-Hastings");
  add_common(mcmc_cmd, mcmc);
  add_eval(mcmc_cmd, mcmc);
  add_mcmc(mcmc_cmd, mcmc);

  auto* oracle_cmd = app.add_subcommand("oracle", "Exact posterior by enumeration (tiny data)");
  add_common(oracle_cmd, oracle);
  oracle_cmd->add_option("--max-nodes-guard", oracle.spec.max_trees,
                         "Refuse instances with more trees than this")
      ->capture_default_str();

  auto* prior_cmd = app.add_subcommand("sample-prior", "Tree size and depth under the prior");
  add_common(prior_cmd, prior);
  prior_cmd->add_option("--draws", prior.spec.draws, "Number of prior draws")
      ->capture_default_str();

  std::string grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every config of a JSON grid");
  sweep_cmd->add_option("--grid", grid, "JSON array of run-spec overrides")->required();
  add_common(sweep_cmd, sweep);
  add_eval(sweep_cmd, sweep);
  add_smc(sweep_cmd, sweep);
  add_mcmc(sweep_cmd, sweep);

  std::string manifest_path, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the configuration of a manifest");
  replay_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")
      ->required();
  replay_cmd->add_option("--out-dir", replay_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (smc_cmd->parsed()) return run_one(resolve(smc, treesmc::Command::smc));
    if (mcmc_cmd->parsed()) return run_one(resolve(mcmc, treesmc::Command::mcmc));
    if (oracle_cmd->parsed()) return run_one(resolve(oracle, treesmc::Command::oracle));
    if (prior_cmd->parsed()) return run_one(resolve(prior, treesmc::Command::sample_prior));
    if (sweep_cmd->parsed()) {
      RunSpec base = resolve(sweep, treesmc::Command::smc);
      std::string out = base.out_dir.empty() ? default_out_dir("sweep") : base.out_dir;
      base.out_dir.clear();
      std::size_t failed = treesmc::run_sweep(grid, base, out);
      std::cerr << "sweep finished, " << failed << " failed entries; results in " << out
                << "/results.csv\n";
      return 0;
    }
    if (replay_cmd->parsed()) {
      std::ifstream f(manifest_path);
      if (!f) throw treesmc::DataError("cannot open manifest: " + manifest_path);
      nlohmann::json m = nlohmann::json::parse(f, nullptr, false);
      if (m.is_discarded() || !m.contains("spec")) {
        throw treesmc::DataError("not a run manifest: " + manifest_path);
      }
      RunSpec spec = treesmc::run_spec_from_json(m["spec"]);
      spec.out_dir = replay_out;
      return run_one(spec);
    }
  } catch (const treesmc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const treesmc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const treesmc::InstanceTooLargeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
