#include "famtune/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace famtune {
namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"tune", "compare", "heatmap", "bars", "report"};

json to_json_object(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["model"] = c.model_path;
  j["out_dir"] = c.out_dir;
  j["curve_out"] = c.curve_out;
  j["budget"] = c.budget;
  j["policy"] = c.policy;
  j["foresee_p"] = c.foresee_p;
  j["cluster_algo"] = c.cluster_algo;
  j["true_families"] = c.true_families;
  j["potential"] = c.potential;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["noise_sigma"] = c.noise_sigma;
  j["t_measure"] = c.t_measure;
  j["t_train_per_sample"] = c.t_train_per_sample;
  j["train_speedup"] = c.train_speedup;
  j["cm_trees"] = c.cm_trees;
  j["cm_depth"] = c.cm_depth;
  j["cm_lr"] = c.cm_lr;
  j["cm_min_split"] = c.cm_min_split;
  j["cm_accelerated"] = c.cm_accelerated;
  j["pool_random"] = c.pool_random;
  j["pool_evolved"] = c.pool_evolved;
  j["epsilon_explore"] = c.epsilon_explore;
  j["samples_per_subgraph"] = c.samples_per_subgraph;
  j["base_latency_min"] = c.base_latency_min;
  j["base_latency_max"] = c.base_latency_max;
  j["delta_max"] = c.delta_max;
  j["curvature_min"] = c.curvature_min;
  j["curvature_max"] = c.curvature_max;
  j["interaction_budget"] = c.interaction_budget;
  j["dump_families"] = c.dump_families;
  j["dump_landscape"] = c.dump_landscape;
  j["dump_cost_model"] = c.dump_cost_model;
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& origin) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": field '" + std::string(key) + "': " + e.what());
  }
}

RunConfig from_json_object(const json& doc, const std::string& origin) {
  if (!doc.is_object()) throw ConfigError(origin + ": expected a JSON object");

  static const std::set<std::string> known = {
      "command",         "model",          "out_dir",          "curve_out",
      "budget",          "policy",         "foresee_p",        "cluster_algo",
      "true_families",   "potential",      "seed",             "workers",
      "noise_sigma",     "t_measure",      "t_train_per_sample", "train_speedup",
      "cm_trees",        "cm_depth",       "cm_lr",            "cm_min_split",
      "cm_accelerated",  "pool_random",    "pool_evolved",     "epsilon_explore",
      "samples_per_subgraph", "base_latency_min", "base_latency_max", "delta_max",
      "curvature_min",   "curvature_max",  "interaction_budget", "dump_families",
      "dump_landscape",  "dump_cost_model"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!known.count(key)) throw ConfigError(origin + ": unknown config key '" + key + "'");
  }

  RunConfig c;
  read_field(doc, "command", c.command, origin);
  read_field(doc, "model", c.model_path, origin);
  read_field(doc, "out_dir", c.out_dir, origin);
  read_field(doc, "curve_out", c.curve_out, origin);
  read_field(doc, "budget", c.budget, origin);
  read_field(doc, "policy", c.policy, origin);
  read_field(doc, "foresee_p", c.foresee_p, origin);
  read_field(doc, "cluster_algo", c.cluster_algo, origin);
  read_field(doc, "true_families", c.true_families, origin);
  read_field(doc, "potential", c.potential, origin);
  read_field(doc, "seed", c.seed, origin);
  read_field(doc, "workers", c.workers, origin);
  read_field(doc, "noise_sigma", c.noise_sigma, origin);
  read_field(doc, "t_measure", c.t_measure, origin);
  read_field(doc, "t_train_per_sample", c.t_train_per_sample, origin);
  read_field(doc, "train_speedup", c.train_speedup, origin);
  read_field(doc, "cm_trees", c.cm_trees, origin);
  read_field(doc, "cm_depth", c.cm_depth, origin);
  read_field(doc, "cm_lr", c.cm_lr, origin);
  read_field(doc, "cm_min_split", c.cm_min_split, origin);
  read_field(doc, "cm_accelerated", c.cm_accelerated, origin);
  read_field(doc, "pool_random", c.pool_random, origin);
  read_field(doc, "pool_evolved", c.pool_evolved, origin);
  read_field(doc, "epsilon_explore", c.epsilon_explore, origin);
  read_field(doc, "samples_per_subgraph", c.samples_per_subgraph, origin);
  read_field(doc, "base_latency_min", c.base_latency_min, origin);
  read_field(doc, "base_latency_max", c.base_latency_max, origin);
  read_field(doc, "delta_max", c.delta_max, origin);
  read_field(doc, "curvature_min", c.curvature_min, origin);
  read_field(doc, "curvature_max", c.curvature_max, origin);
  read_field(doc, "interaction_budget", c.interaction_budget, origin);
  read_field(doc, "dump_families", c.dump_families, origin);
  read_field(doc, "dump_landscape", c.dump_landscape, origin);
  read_field(doc, "dump_cost_model", c.dump_cost_model, origin);
  return c;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void register_options(CLI::App* cmd, RunConfig& c, std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "JSON config file or run manifest (flags override its values)");
  cmd->add_option("--model", c.model_path, "model description file (JSON)");
  cmd->add_option("--out-dir", c.out_dir, "output directory for all files this run writes");
  cmd->add_option("--out", c.curve_out, "tuning-curve CSV filename (within --out-dir)");
  cmd->add_option("--budget", c.budget, "time budget B: total measurement count");
  cmd->add_option("--policy", c.policy, "tuning policy: foresee | monolithic");
  cmd->add_option("--foresee-p", c.foresee_p, "foresee proportion p, 0 < p < 1");
  cmd->add_option("--cluster-algo", c.cluster_algo,
                  "family clustering: core-op | op-count | op-sequence");
  cmd->add_option("--true-families", c.true_families,
                  "landscape ground-truth grouping: core-op | op-count | op-sequence");
  cmd->add_option("--potential", c.potential, "scheduler potential: greedy | gradient");
  cmd->add_option("--seed", c.seed, "run seed; all randomness derives from it");
  cmd->add_option("--workers", c.workers, "parallel measurement workers (simulated devices)");
  cmd->add_option("--noise", c.noise_sigma, "lognormal measurement noise sigma");
  cmd->add_option("--t-measure", c.t_measure, "simulated seconds per measurement");
  cmd->add_option("--t-train-per-sample", c.t_train_per_sample,
                  "simulated training seconds per accumulated sample");
  cmd->add_option("--train-speedup", c.train_speedup, "training speedup when accelerated");
  cmd->add_option("--cm-trees", c.cm_trees, "cost model: boosting rounds");
  cmd->add_option("--cm-depth", c.cm_depth, "cost model: max tree depth");
  cmd->add_option("--cm-lr", c.cm_lr, "cost model: learning rate");
  cmd->add_option("--cm-min-split", c.cm_min_split, "cost model: min samples to split a node");
  cmd->add_flag("--cm-accelerated", c.cm_accelerated, "charge training at accelerated rate");
  cmd->add_option("--pool-random", c.pool_random, "random candidates per pool");
  cmd->add_option("--pool-evolved", c.pool_evolved, "evolved candidates per pool");
  cmd->add_option("--epsilon", c.epsilon_explore, "off-model share of each measured batch");
  cmd->add_option("--samples", c.samples_per_subgraph,
                  "samples per subgraph for heatmap/bars experiments");
  cmd->add_option("--base-latency-min", c.base_latency_min, "landscape base latency lower bound");
  cmd->add_option("--base-latency-max", c.base_latency_max, "landscape base latency upper bound");
  cmd->add_option("--delta-max", c.delta_max, "per-subgraph optimum shift bound");
  cmd->add_option("--curvature-min", c.curvature_min, "archetype curvature lower bound");
  cmd->add_option("--curvature-max", c.curvature_max, "archetype curvature upper bound");
  cmd->add_option("--interaction-budget", c.interaction_budget,
                  "cap on archetype pairwise-interaction mass");
  cmd->add_option("--dump-families", c.dump_families, "write family registry CSV (filename)");
  cmd->add_option("--dump-landscape", c.dump_landscape, "write landscape audit CSV (filename)");
  cmd->add_option("--dump-cost-model", c.dump_cost_model, "write final cost model text dump");
}

std::string find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace

ClusterAlgo RunConfig::cluster_algo_value() const {
  const auto algo = cluster_algo_from_string(cluster_algo);
  if (!algo) throw ConfigError("unknown cluster algorithm '" + cluster_algo + "'");
  return *algo;
}

ClusterAlgo RunConfig::true_families_value() const {
  const auto algo = cluster_algo_from_string(true_families);
  if (!algo) throw ConfigError("unknown true-families algorithm '" + true_families + "'");
  return *algo;
}

PotentialFn RunConfig::potential_value() const {
  if (potential == "greedy") return PotentialFn::LatencyGreedy;
  if (potential == "gradient") return PotentialFn::Gradient;
  throw ConfigError("unknown potential function '" + potential + "'");
}

GbtParams RunConfig::gbt_params() const {
  GbtParams params;
  params.trees = cm_trees;
  params.depth = cm_depth;
  params.learning_rate = cm_lr;
  params.min_samples_split = cm_min_split;
  return params;
}

LandscapeParams RunConfig::landscape_params() const {
  LandscapeParams params;
  params.base_latency_min_ms = base_latency_min;
  params.base_latency_max_ms = base_latency_max;
  params.delta_max = delta_max;
  params.noise_sigma = noise_sigma;
  params.curvature_min = curvature_min;
  params.curvature_max = curvature_max;
  params.interaction_budget = interaction_budget;
  return params;
}

SimClock RunConfig::sim_clock() const {
  SimClock clock;
  clock.t_measure = t_measure;
  clock.t_train_per_sample = t_train_per_sample;
  clock.train_speedup = train_speedup;
  return clock;
}

TuneOptions RunConfig::tune_options() const {
  TuneOptions options;
  options.budget = budget;
  options.foresee_p = foresee_p;
  options.pool_random = pool_random;
  options.pool_evolved = pool_evolved;
  options.epsilon_explore = epsilon_explore;
  options.cost_model = gbt_params();
  options.cm_accelerated = cm_accelerated;
  options.seed = seed;
  return options;
}

Policy RunConfig::policy_value() const {
  if (policy == "foresee") return make_foresee_policy(cluster_algo_value(), potential_value());
  if (policy == "monolithic") return make_baseline_policy(cluster_algo_value(), potential_value());
  throw ConfigError("unknown policy '" + policy + "'");
}

void validate_config(const RunConfig& c) {
  if (!c.command.empty()) {
    check(kCommands.count(c.command) != 0, "unknown command '" + c.command + "'");
    check(!c.model_path.empty(), "a model file is required (--model)");
  }
  check(c.policy == "foresee" || c.policy == "monolithic",
        "policy must be foresee or monolithic, got '" + c.policy + "'");
  check(cluster_algo_from_string(c.cluster_algo).has_value(),
        "cluster-algo must be core-op, op-count or op-sequence, got '" + c.cluster_algo + "'");
  check(cluster_algo_from_string(c.true_families).has_value(),
        "true-families must be core-op, op-count or op-sequence, got '" + c.true_families + "'");
  check(c.potential == "greedy" || c.potential == "gradient",
        "potential must be greedy or gradient, got '" + c.potential + "'");
  check(c.foresee_p > 0.0 && c.foresee_p < 1.0, "foresee-p must satisfy 0 < p < 1");
  check(c.workers >= 1, "workers must be >= 1");
  check(c.budget >= 0, "budget must be non-negative");
  check(c.noise_sigma >= 0.0, "noise sigma must be >= 0");
  check(c.t_measure > 0.0, "t-measure must be > 0");
  check(c.t_train_per_sample >= 0.0, "t-train-per-sample must be >= 0");
  check(c.train_speedup >= 1.0, "train-speedup must be >= 1");
  check(c.cm_trees >= 1, "cm-trees must be >= 1");
  check(c.cm_depth >= 1, "cm-depth must be >= 1");
  check(c.cm_lr > 0.0 && c.cm_lr <= 1.0, "cm-lr must be in (0, 1]");
  check(c.cm_min_split >= 2, "cm-min-split must be >= 2");
  check(c.pool_random >= 0 && c.pool_evolved >= 0 && c.pool_random + c.pool_evolved >= 1,
        "candidate pool must be non-empty");
  check(c.epsilon_explore >= 0.0 && c.epsilon_explore < 1.0, "epsilon must be in [0, 1)");
  check(c.samples_per_subgraph >= 32, "samples must be >= 32");
  check(c.base_latency_min > 0.0 && c.base_latency_max >= c.base_latency_min,
        "base latency range must satisfy 0 < min <= max");
  check(c.delta_max >= 0.0 && c.delta_max <= 0.5, "delta-max must be in [0, 0.5]");
  check(c.curvature_min > 0.0 && c.curvature_max >= c.curvature_min,
        "curvature range must satisfy 0 < min <= max");
  check(c.interaction_budget >= 0.0 && c.interaction_budget < 1.0,
        "interaction-budget must be in [0, 1)");
}

std::string config_to_json(const RunConfig& config) { return to_json_object(config).dump(2) + "\n"; }

RunConfig config_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  // A run manifest embeds the config under "config"; accept both forms. A
  // manifest without a seed cannot reproduce anything.
  if (doc.is_object() && doc.contains("config")) {
    if (!doc.at("config").is_object() || !doc.at("config").contains("seed")) {
      throw ConfigError(origin + ": manifest config is missing its seed");
    }
    return from_json_object(doc.at("config"), origin);
  }
  return from_json_object(doc, origin);
}

RunConfig parse_config(int argc, const char* const* argv) {
  RunConfig config;

  const std::string config_path = find_config_path(argc, argv);
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError(config_path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    config = config_from_json(buf.str(), config_path);
  }
  const std::string file_command = config.command;

  CLI::App app{"subgraph-family auto-tuning sandbox", kToolName};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);
  std::string config_path_sink;

  struct SubInfo {
    const char* name;
    const char* description;
  };
  const SubInfo subs[] = {
      {"tune", "run one tuning policy and write its curve"},
      {"compare", "run baseline and foresee on the same landscape; report threshold speedups"},
      {"heatmap", "cross-subgraph cost model accuracy matrix"},
      {"bars", "monolithic vs individual (vs family) cost model accuracy"},
      {"report", "run one policy and write the per-subgraph budget report"},
  };
  for (const auto& sub : subs) {
    auto* cmd = app.add_subcommand(sub.name, sub.description);
    register_options(cmd, config, config_path_sink);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    throw ConfigHelp(app.help());
  } catch (const CLI::CallForAllHelp& e) {
    throw ConfigHelp(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::CallForVersion&) {
    throw ConfigHelp(std::string(kToolName) + " " + kToolVersion);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  const auto chosen = app.get_subcommands();
  config.command = chosen.front()->get_name();
  if (!file_command.empty() && file_command != config.command) {
    throw ConfigError("config file was recorded for command '" + file_command +
                      "' but '" + config.command + "' was invoked");
  }
  validate_config(config);
  return config;
}

void emit_manifest(const RunConfig& config, const std::string& results_dir,
                   std::uint64_t landscape_digest) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(results_dir, ec);
  if (ec) throw ConfigError(results_dir + ": cannot create directory: " + ec.message());

  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(landscape_digest));

  json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["command"] = config.command;
  manifest["seed"] = config.seed;
  manifest["landscape_digest"] = digest;
  manifest["config"] = to_json_object(config);

  const auto path = fs::path(results_dir) / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot write manifest");
  out << manifest.dump(2) << '\n';
}

std::string resolve_output(const RunConfig& config, const std::string& filename) {
  namespace fs = std::filesystem;
  const fs::path p(filename);
  if (filename.empty() || p.is_absolute()) {
    throw ConfigError("output name '" + filename + "' must be a relative filename");
  }
  for (const auto& part : p) {
    if (part == "..") {
      throw ConfigError("output name '" + filename + "' escapes the output directory");
    }
  }
  return (fs::path(config.out_dir) / p).string();
}

}  // namespace famtune
