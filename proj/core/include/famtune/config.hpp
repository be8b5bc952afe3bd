#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "famtune/costmodel.hpp"
#include "famtune/family.hpp"
#include "famtune/scheduler.hpp"
#include "famtune/simbackend.hpp"

namespace famtune {

inline constexpr const char* kToolName = "famtune";
inline constexpr const char* kToolVersion = "0.1.0";

// Fully resolved run configuration. Every field has a default; flags override
// config-file values which override defaults. Unknown flags and unknown
// config-file keys are rejected.
struct RunConfig {
  std::string command;  // tune | compare | heatmap | bars | report
  std::string model_path;
  std::string out_dir = "famtune-out";
  std::string curve_out = "curve.csv";

  std::int64_t budget = 0;
  std::string policy = "foresee";  // foresee | monolithic
  double foresee_p = 0.25;
  std::string cluster_algo = "core-op";
  std::string true_families = "core-op";  // landscape's ground-truth grouping
  std::string potential = "greedy";       // greedy | gradient
  std::uint64_t seed = 1;
  int workers = 1;

  double noise_sigma = 0.02;
  double t_measure = 1.0;
  double t_train_per_sample = 0.0005;
  double train_speedup = 10.0;

  int cm_trees = 50;
  int cm_depth = 3;
  double cm_lr = 0.1;
  int cm_min_split = 2;
  bool cm_accelerated = false;

  int pool_random = 512;
  int pool_evolved = 512;
  double epsilon_explore = 0.1;
  int samples_per_subgraph = 256;

  double base_latency_min = 0.1;
  double base_latency_max = 10.0;
  double delta_max = 0.15;
  double curvature_min = 0.5;
  double curvature_max = 2.0;
  double interaction_budget = 0.2;

  std::string dump_families;    // optional: family registry CSV
  std::string dump_landscape;   // optional: landscape audit CSV
  std::string dump_cost_model;  // optional: final cost model text dump

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  ClusterAlgo cluster_algo_value() const;
  ClusterAlgo true_families_value() const;
  PotentialFn potential_value() const;
  GbtParams gbt_params() const;
  LandscapeParams landscape_params() const;
  SimClock sim_clock() const;
  TuneOptions tune_options() const;
  Policy policy_value() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// --help / --version were requested; .what() carries the text to print.
struct ConfigHelp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parse argv (subcommand + flags) over an optional --config JSON file over
/// built-in defaults. Throws ConfigError on unknown flags/keys, conflicting or
/// out-of-range values; throws ConfigHelp for --help/--version.
RunConfig parse_config(int argc, const char* const* argv);

/// Serialize/deserialize the full config. from_json starts from defaults,
/// rejects unknown keys, and round-trips: config_from_json(config_to_json(c))
/// equals c.
std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text, const std::string& origin = "<config>");

/// Validate cross-field constraints (ranges, enum names). parse_config calls
/// this; standalone use covers configs built in code.
void validate_config(const RunConfig& config);

/// Write <results_dir>/manifest.json recording the resolved config, seed,
/// tool version and landscape digest. A rerun from the manifest reproduces
/// every output byte for byte.
void emit_manifest(const RunConfig& config, const std::string& results_dir,
                   std::uint64_t landscape_digest);

/// Join an output filename onto the run's output directory; rejects absolute
/// paths and "..", so no command writes outside its output directory.
std::string resolve_output(const RunConfig& config, const std::string& filename);

}  // namespace famtune
