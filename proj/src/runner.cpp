#include "treesmc/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "treesmc/data_io.hpp"
#include "treesmc/eval.hpp"
#include "treesmc/oracle.hpp"

namespace treesmc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

template <typename Enum, typename Parse>
void read_enum(const json& j, const char* key, Enum& out, Parse parse) {
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_string()) throw UsageError(std::string("'") + key + "' must be a string");
    try {
      out = parse(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
}

struct LoadedData {
  Dataset train;
  std::optional<Dataset> test;
};

LoadedData load_data(const RunSpec& spec, bool needs_test) {
  if (spec.data.empty()) throw UsageError("--data is required");
  CsvSpec csv{spec.data, spec.label_col, spec.delimiter, spec.header};
  Dataset all = load_csv(csv);
  if (!needs_test) return {std::move(all), std::nullopt};
  if (!spec.test.empty()) {
    CsvSpec test_csv{spec.test, spec.label_col, spec.delimiter, spec.header};
    Dataset test = load_csv(test_csv, all.label_names());
    if (test.num_features() != all.num_features()) {
      throw DataError("test file has " + std::to_string(test.num_features()) +
                      " features, training file has " + std::to_string(all.num_features()));
    }
    return {std::move(all), std::move(test)};
  }
  if (spec.split_frac >= 1.0) return {std::move(all), std::nullopt};
  TrainTest tt = split(all, spec.split_frac, spec.split_seed);
  return {std::move(tt.train), std::move(tt.test)};
}

json dataset_summary(const Dataset& d) {
  return {{"rows", d.size()}, {"features", d.num_features()}, {"classes", d.num_classes()}};
}

void run_smc(const RunSpec& spec, RunOutcome& out, json& timings) {
  auto t0 = Clock::now();
  LoadedData data = load_data(spec, true);
  timings["load_seconds"] = seconds_since(t0);

  SmcConfig config = spec.smc_config();
  IslandsResult result = islands_run(data.train, spec.hyper, config);

  std::vector<double> island_marginals;
  bool truncated = false;
  for (const SmcResult& r : result.islands) {
    island_marginals.push_back(r.log_marginal);
    truncated = truncated || r.max_stages_reached;
  }
  double log_marginal =
      log_sum_exp(island_marginals) - std::log(static_cast<double>(island_marginals.size()));

  EvalReport report;
  if (data.test) report = evaluate([&](auto x) { return result.predict(x); }, *data.test);
  report.log_marginal = log_marginal;
  report.train_seconds = result.seconds;

  out.report = to_json(report);
  out.report["island_log_marginals"] = island_marginals;
  out.report["max_stages_reached"] = truncated;
  out.report["num_train"] = data.train.size();

  std::ostringstream csv;
  csv.precision(17);
  csv << "island,stage,ess,log_normalizer,live_particles,resampled\n";
  for (std::size_t i = 0; i < result.islands.size(); ++i) {
    for (const StageDiagnostics& d : result.islands[i].diagnostics) {
      csv << i << ',' << d.stage << ',' << d.ess << ',' << d.log_normalizer << ','
          << d.live_particles << ',' << (d.resampled ? 1 : 0) << '\n';
    }
  }
  out.diagnostics_csv = csv.str();
  timings["train_seconds"] = report.train_seconds;
  timings["predict_seconds"] = report.predict_seconds;
  out.manifest["train"] = dataset_summary(data.train);
  if (data.test) out.manifest["test"] = dataset_summary(*data.test);
}

void run_mcmc(const RunSpec& spec, RunOutcome& out, json& timings) {
  auto t0 = Clock::now();
  LoadedData data = load_data(spec, true);
  timings["load_seconds"] = seconds_since(t0);

  McmcConfig config = spec.mcmc_config();
  McmcResult result =
      mcmc_run(data.train, spec.hyper, config, data.test ? &*data.test : nullptr);

  EvalReport report;
  if (data.test) report = evaluate(result.predictive, *data.test);
  report.log_marginal = std::numeric_limits<double>::quiet_NaN();
  report.train_seconds = result.seconds;
  out.report = to_json(report);
  out.report["acceptance_rate"] = finite_or_null(result.acceptance_rate());
  out.report["retained_states"] = result.retained;
  out.report["num_train"] = data.train.size();
  if (result.final_tree) out.report["final_log_posterior"] = result.final_tree->log_posterior();

  std::ostringstream csv;
  csv.precision(17);
  csv << "iteration,move,accepted,log_posterior,num_nodes,depth\n";
  for (const McmcIteration& it : result.trace) {
    csv << it.iteration << ',' << to_string(it.move) << ',' << (it.accepted ? 1 : 0) << ','
        << it.log_posterior << ',' << it.num_nodes << ',' << it.depth << '\n';
  }
  out.diagnostics_csv = csv.str();
  timings["train_seconds"] = report.train_seconds;
  timings["predict_seconds"] = report.predict_seconds;
  out.manifest["train"] = dataset_summary(data.train);
  if (data.test) out.manifest["test"] = dataset_summary(*data.test);
}

void run_oracle(const RunSpec& spec, RunOutcome& out, json& timings) {
  auto t0 = Clock::now();
  LoadedData data = load_data(spec, false);
  timings["load_seconds"] = seconds_since(t0);

  t0 = Clock::now();
  EnumeratedPosterior post = enumerate_posterior(data.train, spec.hyper, spec.max_trees);
  timings["train_seconds"] = seconds_since(t0);

  double mean_nodes = 0.0;
  for (std::size_t i = 0; i < post.trees.size(); ++i) {
    mean_nodes += std::exp(post.log_posterior(i)) * static_cast<double>(post.trees[i].num_nodes);
  }
  out.report = {{"log_marginal", post.log_marginal},
                {"marginal", std::exp(post.log_marginal)},
                {"num_trees", post.trees.size()},
                {"posterior_mean_nodes", mean_nodes},
                {"num_train", data.train.size()},
                {"train_seconds", timings["train_seconds"]}};

  std::vector<std::size_t> order(post.trees.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return post.log_posterior(a) > post.log_posterior(b);
  });
  std::ostringstream csv;
  csv.precision(17);
  csv << "key,num_nodes,depth,log_prior_mass,log_lik,posterior\n";
  for (std::size_t i : order) {
    const EnumeratedTree& t = post.trees[i];
    csv << t.key << ',' << t.num_nodes << ',' << t.depth << ',' << t.log_prior_mass << ','
        << t.log_lik << ',' << std::exp(post.log_posterior(i)) << '\n';
  }
  out.diagnostics_csv = csv.str();
  out.manifest["train"] = dataset_summary(data.train);
}

void run_sample_prior(const RunSpec& spec, RunOutcome& out, json& timings) {
  auto t0 = Clock::now();
  LoadedData data = load_data(spec, false);
  timings["load_seconds"] = seconds_since(t0);

  t0 = Clock::now();
  Rng rng(spec.seed);
  std::ostringstream csv;
  csv << "draw,depth,num_nodes,num_leaves\n";
  double sum_depth = 0.0, sum_depth2 = 0.0, sum_nodes = 0.0, sum_nodes2 = 0.0;
  for (std::size_t i = 0; i < spec.draws; ++i) {
    DecisionTree tree = sample_prior_tree(data.train, spec.hyper, rng);
    auto depth = static_cast<double>(tree.depth());
    auto nodes = static_cast<double>(tree.size());
    sum_depth += depth;
    sum_depth2 += depth * depth;
    sum_nodes += nodes;
    sum_nodes2 += nodes * nodes;
    csv << i << ',' << tree.depth() << ',' << tree.size() << ',' << tree.num_leaves() << '\n';
  }
  timings["train_seconds"] = seconds_since(t0);

  auto n = static_cast<double>(spec.draws);
  auto sd = [n](double s, double s2) {
    return n > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1))) : 0.0;
  };
  out.report = {{"draws", spec.draws},
                {"mean_depth", finite_or_null(sum_depth / n)},
                {"sd_depth", sd(sum_depth, sum_depth2)},
                {"mean_nodes", finite_or_null(sum_nodes / n)},
                {"sd_nodes", sd(sum_nodes, sum_nodes2)},
                {"num_train", data.train.size()},
                {"train_seconds", timings["train_seconds"]}};
  out.diagnostics_csv = csv.str();
  out.manifest["train"] = dataset_summary(data.train);
}

void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string metric_cell(const json& report, const char* key) {
  auto it = report.find(key);
  if (it == report.end() || it->is_null()) return "";
  std::ostringstream s;
  s.precision(17);
  s << it->get<double>();
  return s.str();
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "smc") return Command::smc;
  if (name == "mcmc") return Command::mcmc;
  if (name == "oracle") return Command::oracle;
  if (name == "sample-prior") return Command::sample_prior;
  throw UsageError("unknown command: " + std::string(name));
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::smc: return "smc";
    case Command::mcmc: return "mcmc";
    case Command::oracle: return "oracle";
    case Command::sample_prior: return "sample-prior";
  }
  return "?";
}

SmcConfig RunSpec::smc_config() const {
  SmcConfig c;
  c.num_particles = particles;
  c.num_islands = islands;
  c.proposal = proposal;
  c.expansion = expansion;
  c.priority = priority;
  c.resampler = resampler;
  c.ess_threshold_fraction = ess_frac;
  c.max_stages = max_stages;
  c.seed = seed;
  c.threads = threads;
  return c;
}

McmcConfig RunSpec::mcmc_config() const {
  McmcConfig c;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.seed = seed;
  return c;
}

void RunSpec::validate() const {
  try {
    hyper.validate();
    if (command == Command::smc) smc_config().validate();
    if (command == Command::mcmc) mcmc_config().validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (command == Command::smc || command == Command::mcmc) {
    if (test.empty() && !(split_frac > 0.0 && split_frac <= 1.0)) {
      throw UsageError("--split-frac must be in (0, 1]");
    }
  }
  if (command == Command::oracle && max_trees == 0) {
    throw UsageError("--max-nodes-guard must be positive");
  }
  if (command == Command::sample_prior && draws == 0) throw UsageError("--draws must be positive");
}

json to_json(const RunSpec& s) {
  return {{"command", to_string(s.command)},
          {"data", s.data},
          {"test", s.test},
          {"label_col", s.label_col},
          {"delimiter", std::string(1, s.delimiter)},
          {"header", s.header},
          {"split_frac", s.split_frac},
          {"split_seed", s.split_seed},
          {"alpha", s.hyper.alpha},
          {"alpha_split", s.hyper.alpha_split},
          {"beta_split", s.hyper.beta_split},
          {"particles", s.particles},
          {"islands", s.islands},
          {"proposal", to_string(s.proposal)},
          {"expansion", to_string(s.expansion)},
          {"priority", to_string(s.priority)},
          {"resampler", to_string(s.resampler)},
          {"ess_frac", s.ess_frac},
          {"max_stages", s.max_stages},
          {"threads", s.threads},
          {"iterations", s.iterations},
          {"burn_in", s.burn_in},
          {"max_nodes_guard", s.max_trees},
          {"draws", s.draws},
          {"seed", s.seed},
          {"out_dir", s.out_dir}};
}

RunSpec run_spec_from_json(const json& j, const RunSpec& base) {
  if (!j.is_object()) throw UsageError("run spec must be a JSON object");
  static const json known = to_json(RunSpec{});
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw UsageError("unknown run spec key: " + key);
  }
  RunSpec s = base;
  read_enum(j, "command", s.command, parse_command);
  read_key(j, "data", s.data);
  read_key(j, "test", s.test);
  read_key(j, "label_col", s.label_col);
  if (auto it = j.find("delimiter"); it != j.end()) {
    auto d = it->get<std::string>();
    if (d.size() != 1) throw UsageError("delimiter must be one character");
    s.delimiter = d[0];
  }
  read_key(j, "header", s.header);
  read_key(j, "split_frac", s.split_frac);
  read_key(j, "split_seed", s.split_seed);
  read_key(j, "alpha", s.hyper.alpha);
  read_key(j, "alpha_split", s.hyper.alpha_split);
  read_key(j, "beta_split", s.hyper.beta_split);
  read_key(j, "particles", s.particles);
  read_key(j, "islands", s.islands);
  read_enum(j, "proposal", s.proposal, parse_proposal);
  read_enum(j, "expansion", s.expansion, parse_expansion);
  read_enum(j, "priority", s.priority, parse_priority);
  read_enum(j, "resampler", s.resampler, parse_resampler);
  read_key(j, "ess_frac", s.ess_frac);
  read_key(j, "max_stages", s.max_stages);
  read_key(j, "threads", s.threads);
  read_key(j, "iterations", s.iterations);
  read_key(j, "burn_in", s.burn_in);
  read_key(j, "max_nodes_guard", s.max_trees);
  read_key(j, "draws", s.draws);
  read_key(j, "seed", s.seed);
  read_key(j, "out_dir", s.out_dir);
  return s;
}

RunOutcome execute(const RunSpec& spec) {
  spec.validate();
  RunOutcome out;
  json timings = json::object();
  auto t0 = Clock::now();
  switch (spec.command) {
    case Command::smc: run_smc(spec, out, timings); break;
    case Command::mcmc: run_mcmc(spec, out, timings); break;
    case Command::oracle: run_oracle(spec, out, timings); break;
    case Command::sample_prior: run_sample_prior(spec, out, timings); break;
  }
  timings["total_seconds"] = seconds_since(t0);
  out.report["command"] = to_string(spec.command);
  out.report["config"] = to_json(spec);
  out.report["config"].erase("out_dir");
  out.manifest["tool"] = "treesmc";
  out.manifest["version"] = kToolVersion;
  out.manifest["spec"] = to_json(spec);
  out.manifest["timings"] = timings;
  return out;
}

void write_artifacts(const RunOutcome& outcome, const fs::path& dir) {
  fs::create_directories(dir);
  write_atomic(dir / "report.json", outcome.report.dump(2) + "\n");
  write_atomic(dir / "diagnostics.csv", outcome.diagnostics_csv);
  write_atomic(dir / "manifest.json", outcome.manifest.dump(2) + "\n");
}

json metric_fields(const json& report) {
  json m = report;
  for (const char* k : {"train_seconds", "predict_seconds"}) m.erase(k);
  return m;
}

std::string config_hash(const RunSpec& spec) {
  json j = to_json(spec);
  j.erase("out_dir");
  std::size_t h = std::hash<std::string>{}(j.dump());
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

std::size_t run_sweep(const fs::path& grid, const RunSpec& base, const fs::path& out) {
  std::ifstream f(grid);
  if (!f) throw DataError("cannot open grid file: " + grid.string());
  json g;
  try {
    g = json::parse(f);
  } catch (const json::exception& e) {
    throw DataError("grid file is not valid JSON: " + std::string(e.what()));
  }
  if (g.is_object() && g.contains("runs")) g = g["runs"];
  if (!g.is_array()) throw UsageError("grid must be a JSON array of run specs");

  fs::create_directories(out);
  fs::path results = out / "results.csv";
  bool fresh = !fs::exists(results);
  std::ofstream rows(results, std::ios::app);
  if (!rows) throw std::runtime_error("cannot write " + results.string());
  if (fresh) {
    rows << "config_hash,command,proposal,expansion,particles,islands,iterations,seed,"
            "status,runtime_seconds,train_seconds,predict_seconds,mean_log_predictive,"
            "accuracy,log_marginal,error\n";
  }

  std::size_t failures = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    RunSpec spec = base;
    std::string hash, status = "ok", error;
    json report = json::object();
    double runtime = 0.0;
    try {
      spec = run_spec_from_json(g[i], base);
      hash = config_hash(spec);
      RunOutcome outcome = execute(spec);
      runtime = outcome.manifest["timings"]["total_seconds"].get<double>();
      write_artifacts(outcome, out / "runs" / hash);
      report = outcome.report;
    } catch (const std::exception& e) {
      ++failures;
      status = "error";
      error = e.what();
      if (hash.empty()) hash = "entry" + std::to_string(i);
    }
    std::ostringstream line;
    line.precision(17);
    line << hash << ',' << to_string(spec.command) << ',' << to_string(spec.proposal) << ','
         << to_string(spec.expansion) << ',' << spec.particles << ',' << spec.islands << ','
         << spec.iterations << ',' << spec.seed << ',' << status << ',' << runtime << ','
         << metric_cell(report, "train_seconds") << ','
         << metric_cell(report, "predict_seconds") << ','
         << metric_cell(report, "mean_log_predictive") << ','
         << metric_cell(report, "accuracy") << ',' << metric_cell(report, "log_marginal") << ','
         << csv_field(error) << '\n';
    rows << line.str() << std::flush;
  }
  return failures;
}

}  // namespace treesmc
