#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "famtune/searchspace.hpp"

namespace famtune {

// Closed operator vocabulary. A subgraph is a fused sequence of these; the
// parser rejects anything outside the list.
enum class OpKind : std::uint8_t {
  Conv1d,
  Conv2d,
  Conv3d,
  DepthwiseConv2d,
  Dense,
  BatchMatmul,
  Softmax,
  Pooling,
  Relu,
  Gelu,
  Sigmoid,
  Tanh,
  Add,
  Multiply,
  LayerNorm,
  BatchNorm,
  Embedding,
  Transpose,
  Reshape,
  Reduce,
};

std::string_view to_string(OpKind kind);
std::optional<OpKind> op_kind_from_string(std::string_view name);
std::span<const OpKind> all_op_kinds();

struct OperatorNode {
  OpKind op_kind = OpKind::Add;
  std::vector<std::int64_t> input_shape;      // non-empty, all dims >= 1
  std::map<std::string, std::int64_t> attrs;  // ordered by key

  friend bool operator==(const OperatorNode&, const OperatorNode&) = default;
};

struct Subgraph {
  int id = -1;
  std::vector<OperatorNode> ops;
  OpKind core_op = OpKind::Add;  // dominant operator recorded at fusion time
  std::int64_t weight = 1;       // occurrence count in the model
  SpaceDescriptor knob_space;
};

struct ModelGraph {
  std::string name;
  std::vector<Subgraph> subgraphs;  // ids contiguous 0..n-1
};

inline constexpr int kMaxSubgraphs = 64;

/// "kind[dims;attrs]" - the canonical form behind dedup and ordering.
std::string serialize_op(const OperatorNode& op);
std::string serialize_ops(const Subgraph& sg);

/// Operator kinds only, shapes and attrs excluded.
std::string serialize_op_sequence(const Subgraph& sg);

/// Parse and validate a model-description file (JSON; see docs/model-format.md).
/// Entries with identical serialized ops merge, summing weights. Throws
/// ModelFormatError on syntax or invariant violations.
ModelGraph load_model(const std::string& path);

/// Same as load_model but from an in-memory document.
ModelGraph parse_model(std::string_view text, const std::string& origin = "<string>");

/// Deduplicate and reindex: merges subgraphs with identical serialized ops
/// (weights sum) and orders the result by (op sequence, full serialization).
/// Idempotent and insensitive to input order.
std::vector<Subgraph> construct_subgraphs(const ModelGraph& model);

/// Throws ModelFormatError if any ModelGraph invariant is broken.
void validate_model(const ModelGraph& model);

/// Weighted sum of per-subgraph best latencies, indexed by subgraph id.
double model_latency(const ModelGraph& model, std::span<const double> best_latency_ms);

/// Widest padded feature vector any subgraph of this model needs.
int max_feature_dim(const ModelGraph& model);

struct ModelFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace famtune
