#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "famtune/graph.hpp"

namespace famtune {

// Subgraphs with similar attributes are clustered into families that share
// one cost model. Clustering is a pure function of subgraph attributes; it
// runs once, ahead of tuning.

enum class ClusterAlgo {
  ByCoreOp,      // same core operator (default; best observed accuracy)
  ByOpCount,     // same operator count
  ByOpSequence,  // same serialized op-kind sequence, shapes excluded
};

std::string_view to_string(ClusterAlgo algo);
std::optional<ClusterAlgo> cluster_algo_from_string(std::string_view name);

struct SubgraphFamily {
  int family_id = -1;
  std::vector<int> member_ids;  // sorted ascending, non-empty
  std::string signature;        // the clustering key
};

class FamilyRegistry {
 public:
  FamilyRegistry() = default;
  FamilyRegistry(std::vector<SubgraphFamily> families, int subgraph_count);

  const std::vector<SubgraphFamily>& families() const { return families_; }
  int family_count() const { return static_cast<int>(families_.size()); }
  int subgraph_count() const { return static_cast<int>(index_.size()); }

  /// Family id for a subgraph. Throws std::out_of_range on unknown ids.
  int family_of(int subgraph_id) const;
  const SubgraphFamily& family(int family_id) const;

  /// CSV dump: subgraph_id, family_id, signature.
  std::string to_csv() const;

 private:
  std::vector<SubgraphFamily> families_;
  std::vector<int> index_;  // subgraph id -> family id
};

FamilyRegistry cluster_by_core_op(std::span<const Subgraph> subgraphs);
FamilyRegistry cluster_by_op_count(std::span<const Subgraph> subgraphs);
FamilyRegistry cluster_by_op_sequence(std::span<const Subgraph> subgraphs);

FamilyRegistry build_registry(ClusterAlgo algo, std::span<const Subgraph> subgraphs);

/// The unique family containing subgraph_id (Lookup used by the tuner loop).
const SubgraphFamily& find_family(int subgraph_id, const FamilyRegistry& registry);

}  // namespace famtune
