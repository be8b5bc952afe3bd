#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "famtune/costmodel.hpp"
#include "famtune/scheduler.hpp"
#include "famtune/simbackend.hpp"

namespace famtune {

// Reproduction harnesses for the motivating measurements: cross-subgraph
// accuracy heatmaps, monolithic-vs-individual accuracy bars, budget-allocation
// reports, and paired policy comparisons with speedup-at-threshold ratios.
// The accuracy experiments own their training sets; they never touch tuner
// budget state.

struct HeatmapResult {
  int n = 0;
  std::vector<double> accuracy;     // n*n, row-major; NaN when undefined
  std::vector<int> pair_count;      // counted validation pairs per cell
  std::vector<int> sample_count;    // per subgraph: samples drawn

  double cell(int row, int col) const { return accuracy[static_cast<std::size_t>(row * n + col)]; }
  std::string to_csv() const;
};

/// Train one model per subgraph on its own samples; cell (X, Y) is model X's
/// pairwise accuracy on subgraph Y's validation split (80/20).
HeatmapResult run_heatmap(const ModelGraph& model, const Landscape& landscape,
                          int samples_per_subgraph, std::uint64_t seed,
                          const GbtParams& params = {});

struct AccuracyBars {
  struct Row {
    int subgraph_id = 0;
    int train_samples = 0;
    double monolithic = 0.0;
    double individual = 0.0;
    double family = 0.0;  // only meaningful when a registry was supplied
  };
  std::vector<Row> rows;
  bool has_family = false;
  std::string to_csv() const;
};

/// Monolithic model on the union of all training splits vs per-subgraph
/// models on their own shares, both scored on each subgraph's validation
/// split. `samples_per_subgraph` may vary per subgraph to model data
/// starvation; `families` adds a per-family-model column.
AccuracyBars run_accuracy_bars(const ModelGraph& model, const Landscape& landscape,
                               std::span<const int> samples_per_subgraph, std::uint64_t seed,
                               const GbtParams& params = {},
                               const FamilyRegistry* families = nullptr);
AccuracyBars run_accuracy_bars(const ModelGraph& model, const Landscape& landscape,
                               int samples_per_subgraph, std::uint64_t seed,
                               const GbtParams& params = {},
                               const FamilyRegistry* families = nullptr);

struct ThresholdHit {
  double performance_fraction = 0.0;  // 0.8, 0.9, 1.0
  double target_latency_ms = 0.0;     // baseline_final / fraction
  std::int64_t baseline_b = -1;       // first budget reaching the target; -1 = never
  std::int64_t foresee_b = -1;
  double baseline_wall = -1.0;
  double foresee_wall = -1.0;
  double budget_ratio = 0.0;  // baseline_b / foresee_b when both reached
  double wall_ratio = 0.0;
};

struct ComparisonReport {
  TunerState baseline;
  TunerState foresee;
  double baseline_final_ms = 0.0;
  double foresee_final_ms = 0.0;
  std::array<ThresholdHit, 3> thresholds;  // 80%, 90%, 100% of baseline performance

  std::string to_csv() const;
};

struct CompareConfig {
  std::int64_t budget = 0;
  double foresee_p = 0.25;
  std::uint64_t seed = 1;
  int workers = 1;
  ClusterAlgo cluster_algo = ClusterAlgo::ByCoreOp;
  PotentialFn potential = PotentialFn::LatencyGreedy;
  SimClock clock;
  TuneOptions tune;  // budget/p/seed fields are overwritten from above
};

/// Run the monolithic baseline and the foresee policy against bitwise
/// identical landscapes and noise streams, then locate, for each performance
/// threshold of the baseline's final latency, the first budget and wall time
/// at which each policy reaches it. Performance fraction x maps to latency
/// target final/x (performance = 1/latency).
ComparisonReport run_compare(const ModelGraph& model, const Landscape& landscape,
                             const CompareConfig& config);

struct BudgetReportRow {
  int subgraph_id = 0;
  std::int64_t weight = 0;
  std::int64_t measurements = 0;
  double share = 0.0;  // of the final used budget
  double first_latency_ms = 0.0;
  double best_latency_ms = 0.0;
  std::int64_t last_improvement_at = 0;  // per-subgraph measurement index
  bool plateaued = false;  // no improvement over the final 25% of its allocation
  bool exhausted = false;
};

struct BudgetReport {
  std::vector<BudgetReportRow> rows;
  std::int64_t total_measurements = 0;
  std::string to_csv() const;
};

/// Per-subgraph budget allocation and plateau flags for a completed run.
BudgetReport run_budget_report(const TunerState& state, const ModelGraph& model);

}  // namespace famtune
