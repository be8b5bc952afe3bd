#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "famtune/family.hpp"
#include "famtune/graph.hpp"
#include "famtune/rng.hpp"
#include "famtune/searchspace.hpp"

namespace famtune {

// Deterministic synthetic latency landscapes stand in for real hardware.
// Subgraphs that share an archetype see the same quadratic surface over
// normalized knob positions, shifted per subgraph and scaled by its base
// latency, so a model trained on one family member transfers to the others.

struct ArchetypeParams {
  std::vector<double> optimum;      // kMaxKnobs entries in [0, 1]
  double curvature = 1.0;           // > 0
  std::vector<double> interaction;  // kMaxKnobs x kMaxKnobs, symmetric, zero diagonal
};

struct SubgraphLandscape {
  double base_latency_ms = 1.0;  // > 0
  int archetype_id = 0;
  std::vector<double> shift;  // per-knob optimum offset, |shift| <= delta_max
  double noise_sigma = 0.0;   // lognormal measurement noise
};

struct LandscapeParams {
  double base_latency_min_ms = 0.1;
  double base_latency_max_ms = 10.0;
  double delta_max = 0.15;
  double noise_sigma = 0.02;
  double curvature_min = 0.5;
  double curvature_max = 2.0;
  double interaction_budget = 0.2;  // cap on sum |W_ij|; keeps latencies positive
};

struct Landscape {
  std::vector<ArchetypeParams> archetypes;
  std::vector<SubgraphLandscape> subgraphs;  // indexed by subgraph id
};

/// Draw one archetype per family in `truth` and per-subgraph bases/shifts.
/// Bitwise-deterministic for a given (model, truth, seed, params).
Landscape make_landscape(const ModelGraph& model, const FamilyRegistry& truth,
                         std::uint64_t seed, const LandscapeParams& params = {});

/// Noise-free latency of one assignment.
double true_latency(const Landscape& landscape, const Subgraph& sg,
                    std::span<const std::int32_t> assignment);

/// One noisy measurement: true latency times exp(Normal(0, sigma^2)).
double measure(const Landscape& landscape, const Subgraph& sg, const Candidate& candidate,
               Rng& rng);

/// Exhaustive noise-free minimum. Requires space_size <= 1e6.
std::pair<Candidate, double> brute_force_optimum(const Subgraph& sg, const Landscape& landscape);

/// CSV audit dump: subgraph_id, archetype_id, base_latency_ms, noise_sigma.
std::string landscape_to_csv(const Landscape& landscape);

/// FNV digest of the audit dump plus shifts; recorded in run manifests.
std::uint64_t landscape_digest(const Landscape& landscape);

struct SimClock {
  double now = 0.0;  // simulated seconds, non-decreasing
  double t_measure = 1.0;
  double t_train_per_sample = 0.0005;
  double train_speedup = 10.0;  // cost model training on an accelerator
};

/// Owns the landscape, the clock and the per-subgraph noise streams. Noise
/// streams are derived from (seed, subgraph_id), so the worker count changes
/// only the clock, never the measured values.
class SimBackend {
 public:
  SimBackend(const ModelGraph& model, Landscape landscape, std::uint64_t seed,
             SimClock clock = {}, int workers = 1);

  /// Measure all candidates in input order. The clock advances by
  /// ceil(m / workers) * t_measure; each record is stamped with its slot's
  /// completion time.
  std::vector<MeasurementRecord> run_batch(std::span<const Candidate> candidates);
  std::vector<MeasurementRecord> run_batch(std::span<const Candidate> candidates, int workers);

  /// Account one cost-model training pass against the simulated clock.
  void charge_training(std::int64_t n_samples, bool accelerated);

  double default_latency(int subgraph_id) const;
  std::pair<Candidate, double> optimum(int subgraph_id) const;

  const ModelGraph& model() const { return model_; }
  const Landscape& landscape() const { return landscape_; }
  SimClock& clock() { return clock_; }
  const SimClock& clock() const { return clock_; }
  int workers() const { return workers_; }
  int feature_pad_dim() const { return pad_dim_; }

 private:
  const ModelGraph& model_;
  Landscape landscape_;
  SimClock clock_;
  int workers_;
  int pad_dim_;
  std::vector<Rng> noise_streams_;  // one per subgraph
};

}  // namespace famtune
