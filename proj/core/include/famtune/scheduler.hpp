#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "famtune/costmodel.hpp"
#include "famtune/family.hpp"
#include "famtune/graph.hpp"
#include "famtune/simbackend.hpp"

namespace famtune {

// The tuning engine. Each iteration tunes the global bottleneck subgraph with
// g candidates picked by its cost model, retrains, and - when the bottleneck's
// family has siblings - spends another floor(g*p) measurements on the family's
// next bottleneck with the freshly retrained family model (the foresee phase).
// The monolithic baseline runs the same loop with one shared model and no
// foresee phase.

enum class PolicyMode { Foresee, Monolithic };
enum class PotentialFn { LatencyGreedy, Gradient };
enum class ModelGranularity { PerFamily, Monolithic };

struct Policy {
  PolicyMode mode = PolicyMode::Foresee;
  PotentialFn potential = PotentialFn::LatencyGreedy;
  ClusterAlgo cluster_algo = ClusterAlgo::ByCoreOp;
  // Derived knobs; kept separate so tests can decouple them from `mode`.
  ModelGranularity granularity = ModelGranularity::PerFamily;
  bool foresee_phase = true;
};

Policy make_foresee_policy(ClusterAlgo algo = ClusterAlgo::ByCoreOp,
                           PotentialFn potential = PotentialFn::LatencyGreedy);
Policy make_baseline_policy(ClusterAlgo algo = ClusterAlgo::ByCoreOp,
                            PotentialFn potential = PotentialFn::LatencyGreedy);

struct TuneOptions {
  std::int64_t budget = 0;  // B, total measurement count
  double foresee_p = 0.25;  // in (0, 1)
  int pool_random = 512;
  int pool_evolved = 512;
  double epsilon_explore = 0.10;  // share of each measured batch drawn off-model
  GbtParams cost_model;
  bool cm_accelerated = false;
  std::uint64_t seed = 1;  // candidate-generation streams
};

struct CurvePoint {
  std::int64_t b = 0;            // used budget after this phase
  double wall_seconds = 0.0;     // simulated wall clock
  double model_latency_ms = 0.0;
  std::string phase;             // init | main | foresee
  int tuned_subgraph = -1;
};

struct SubgraphTunerState {
  double best_latency_ms = 0.0;  // starts at the default candidate's latency
  Candidate best_candidate;
  bool measured_any = false;
  bool exhausted = false;
  std::int64_t spent = 0;  // measurements consumed by this subgraph
  std::int64_t last_improvement_spent = 0;
  MeasuredSet measured;
  std::vector<MeasurementRecord> records;
  std::vector<std::pair<std::int64_t, double>> best_history;  // (global b, best) per step
  // Gradient-potential bookkeeping: best before/size of the last tune step.
  double prev_best_latency_ms = 0.0;
  std::int64_t last_step_measurements = 0;
};

struct TunerState {
  std::int64_t b = 0;       // used budget
  std::int64_t budget = 0;  // B
  int g = 0;                // candidates per main iteration
  double p = 0.0;
  std::vector<SubgraphTunerState> per_subgraph;
  std::vector<CurvePoint> curve;

  double model_latency_now(const ModelGraph& model) const;
};

std::string curve_to_csv(const TunerState& state);

/// Priority of one subgraph. Greedy: weight * best latency, with unmeasured
/// subgraphs ranked above everything. Gradient: weight * max(backward
/// improvement rate over the last step, best / spent).
double calculate_potential(const TunerState& state, const Subgraph& sg, PotentialFn fn);

/// Highest-potential non-exhausted subgraph in scope, smaller id on ties.
/// Returns -1 when every subgraph in scope is exhausted; throws on an empty
/// scope.
int select_bottleneck(std::span<const int> scope, const TunerState& state,
                      const ModelGraph& model, PotentialFn fn);

class TuningEngine {
 public:
  TuningEngine(SimBackend& backend, Policy policy, TuneOptions options);

  /// Run the full loop until the budget is used or every space is exhausted.
  TunerState run();

  /// One tuning step: generate a candidate pool, rank it with `model`,
  /// measure the top g_eff (with the epsilon-random slots), and fold the
  /// records into the state. Returns the records; empty means exhausted.
  std::vector<MeasurementRecord> tune_step(int subgraph_id, CostModelState& model, int g_eff);

  TunerState& state() { return state_; }
  const FamilyRegistry& registry() const { return registry_; }
  std::span<CostModelState> models() { return models_; }
  CostModelState& model_for(int subgraph_id);

 private:
  void init_state();
  void record_point(const char* phase, int subgraph_id);
  void train_and_charge(std::span<const MeasurementRecord> records, CostModelState& model);

  SimBackend& backend_;
  const ModelGraph& model_;
  Policy policy_;
  TuneOptions options_;
  FamilyRegistry registry_;
  std::vector<CostModelState> models_;  // one per family, or a single entry
  std::vector<Rng> gen_streams_;        // candidate generation, one per subgraph
  TunerState state_;
};

/// Algorithm entry points. Both validate 0 < p < 1 and B >= subgraph count.
TunerState foresee_tune(SimBackend& backend, std::int64_t budget, double p, Policy policy,
                        TuneOptions options = {});
TunerState baseline_tune(SimBackend& backend, std::int64_t budget, Policy policy,
                         TuneOptions options = {});

}  // namespace famtune
