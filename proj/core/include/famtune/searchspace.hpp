#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "famtune/rng.hpp"

namespace famtune {

// A knob is one discrete transformation parameter (tile size, unroll factor,
// vector width). A subgraph's search space is the cross product of its knob
// value lists.

inline constexpr int kMaxKnobs = 16;

struct Knob {
  std::string name;
  std::vector<std::int64_t> values;  // non-empty, distinct, all >= 1
};

struct SpaceDescriptor {
  std::vector<Knob> knobs;  // 1..kMaxKnobs entries
};

/// Throws std::invalid_argument if the descriptor breaks an invariant.
void validate_space(const SpaceDescriptor& space, const std::string& context = {});

/// Product of value-list sizes. Throws on 64-bit overflow.
std::uint64_t space_size(const SpaceDescriptor& space);

struct Candidate {
  int subgraph_id = -1;
  std::vector<std::int32_t> assignment;  // value index per knob

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Mixed-radix rank of an assignment; the canonical dedup key for a space.
std::uint64_t linear_index(const SpaceDescriptor& space, std::span<const std::int32_t> assignment);

Candidate candidate_from_index(const SpaceDescriptor& space, int subgraph_id, std::uint64_t index);

/// Every knob at its first value. Stands in for the untuned program.
Candidate default_candidate(const SpaceDescriptor& space, int subgraph_id);

bool valid_candidate(const SpaceDescriptor& space, const Candidate& c);

struct MeasurementRecord {
  Candidate candidate;
  std::vector<double> features;
  double latency_ms = 0.0;   // > 0
  double measured_at = 0.0;  // simulated wall-clock seconds
};

/// Feature vector length for K knobs before padding: 2K + K(K-1)/2.
int feature_dim(int knob_count);

/// Features for one assignment: log2(value) per knob, normalized value-list
/// position per knob, then pairwise log2 products; zero-padded to pad_dim so
/// one model can serve subgraphs with different knob counts.
/// Throws std::invalid_argument if pad_dim is too small for the space.
std::vector<double> featurize(const SpaceDescriptor& space,
                              std::span<const std::int32_t> assignment,
                              int pad_dim);

/// Measured-candidate bookkeeping for one subgraph, keyed by linear index.
class MeasuredSet {
 public:
  void add(std::uint64_t key, double latency_ms) {
    if (keys_.insert(key).second) items_.emplace_back(key, latency_ms);
  }
  bool contains(std::uint64_t key) const { return keys_.count(key) != 0; }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::uint64_t, double>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::uint64_t, double>> items_;
  std::unordered_set<std::uint64_t> keys_;
};

/// Candidate pool for one tuning step: pool_random uniform draws plus
/// pool_evolved single-knob mutations of top-quartile measured parents.
/// Never returns a candidate already in `measured`; with an empty history all
/// slots are random. When fewer unmeasured candidates remain than requested,
/// returns exactly the remainder (possibly empty).
std::vector<Candidate> generate_candidates(const SpaceDescriptor& space,
                                           int subgraph_id,
                                           const MeasuredSet& measured,
                                           int pool_random,
                                           int pool_evolved,
                                           Rng& rng);

}  // namespace famtune
