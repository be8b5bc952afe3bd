#include "famtune/family.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "famtune/rng.hpp"

namespace famtune {
namespace {

struct Key {
  // sort_key orders family ids; signature is what the dump shows.
  std::string sort_key;
  std::string signature;

  bool operator<(const Key& other) const { return sort_key < other.sort_key; }
};

FamilyRegistry cluster_by(std::span<const Subgraph> subgraphs,
                          const std::function<Key(const Subgraph&)>& key_fn) {
  if (subgraphs.empty()) {
    throw std::invalid_argument("clustering requires a non-empty subgraph list");
  }
  std::map<Key, std::vector<int>> groups;
  for (const auto& sg : subgraphs) {
    groups[key_fn(sg)].push_back(sg.id);
  }
  std::vector<SubgraphFamily> families;
  families.reserve(groups.size());
  int next_id = 0;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end());
    families.push_back({next_id++, std::move(members), key.signature});
  }
  return FamilyRegistry(std::move(families), static_cast<int>(subgraphs.size()));
}

std::string zero_pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  return std::string(static_cast<std::size_t>(width) > s.size() ? width - s.size() : 0, '0') + s;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

FamilyRegistry::FamilyRegistry(std::vector<SubgraphFamily> families, int subgraph_count)
    : families_(std::move(families)), index_(static_cast<std::size_t>(subgraph_count), -1) {
  for (const auto& fam : families_) {
    if (fam.member_ids.empty()) {
      throw std::invalid_argument("family " + std::to_string(fam.family_id) + " has no members");
    }
    for (int sid : fam.member_ids) {
      if (sid < 0 || sid >= subgraph_count) {
        throw std::out_of_range("family member id " + std::to_string(sid) + " out of range");
      }
      if (index_[static_cast<std::size_t>(sid)] != -1) {
        throw std::invalid_argument("subgraph " + std::to_string(sid) + " assigned to two families");
      }
      index_[static_cast<std::size_t>(sid)] = fam.family_id;
    }
  }
  for (std::size_t sid = 0; sid < index_.size(); ++sid) {
    if (index_[sid] == -1) {
      throw std::invalid_argument("subgraph " + std::to_string(sid) + " not covered by any family");
    }
  }
}

int FamilyRegistry::family_of(int subgraph_id) const {
  if (subgraph_id < 0 || static_cast<std::size_t>(subgraph_id) >= index_.size()) {
    throw std::out_of_range("unknown subgraph id " + std::to_string(subgraph_id));
  }
  return index_[static_cast<std::size_t>(subgraph_id)];
}

const SubgraphFamily& FamilyRegistry::family(int family_id) const {
  if (family_id < 0 || static_cast<std::size_t>(family_id) >= families_.size()) {
    throw std::out_of_range("unknown family id " + std::to_string(family_id));
  }
  return families_[static_cast<std::size_t>(family_id)];
}

std::string FamilyRegistry::to_csv() const {
  std::ostringstream out;
  out << "subgraph_id,family_id,signature\n";
  for (std::size_t sid = 0; sid < index_.size(); ++sid) {
    const auto& fam = families_[static_cast<std::size_t>(index_[sid])];
    out << sid << ',' << fam.family_id << ',' << fam.signature << '\n';
  }
  return out.str();
}

FamilyRegistry cluster_by_core_op(std::span<const Subgraph> subgraphs) {
  return cluster_by(subgraphs, [](const Subgraph& sg) {
    const std::string name(to_string(sg.core_op));
    return Key{name, name};
  });
}

FamilyRegistry cluster_by_op_count(std::span<const Subgraph> subgraphs) {
  return cluster_by(subgraphs, [](const Subgraph& sg) {
    // Zero-padded sort key keeps numeric order; signature stays plain.
    return Key{zero_pad(sg.ops.size(), 6), std::to_string(sg.ops.size())};
  });
}

FamilyRegistry cluster_by_op_sequence(std::span<const Subgraph> subgraphs) {
  return cluster_by(subgraphs, [](const Subgraph& sg) {
    const std::string sequence = serialize_op_sequence(sg);
    return Key{sequence, hex64(fnv1a64(sequence))};
  });
}

FamilyRegistry build_registry(ClusterAlgo algo, std::span<const Subgraph> subgraphs) {
  switch (algo) {
    case ClusterAlgo::ByCoreOp:
      return cluster_by_core_op(subgraphs);
    case ClusterAlgo::ByOpCount:
      return cluster_by_op_count(subgraphs);
    case ClusterAlgo::ByOpSequence:
      return cluster_by_op_sequence(subgraphs);
  }
  throw std::invalid_argument("unknown cluster algorithm");
}

const SubgraphFamily& find_family(int subgraph_id, const FamilyRegistry& registry) {
  return registry.family(registry.family_of(subgraph_id));
}

std::string_view to_string(ClusterAlgo algo) {
  switch (algo) {
    case ClusterAlgo::ByCoreOp:
      return "core-op";
    case ClusterAlgo::ByOpCount:
      return "op-count";
    case ClusterAlgo::ByOpSequence:
      return "op-sequence";
  }
  return "unknown";
}

std::optional<ClusterAlgo> cluster_algo_from_string(std::string_view name) {
  if (name == "core-op") return ClusterAlgo::ByCoreOp;
  if (name == "op-count") return ClusterAlgo::ByOpCount;
  if (name == "op-sequence") return ClusterAlgo::ByOpSequence;
  return std::nullopt;
}

}  // namespace famtune
