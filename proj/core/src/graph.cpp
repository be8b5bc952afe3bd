#include "famtune/graph.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace famtune {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<OpKind, std::string_view>, 20> kOpNames = {{
    {OpKind::Conv1d, "conv1d"},
    {OpKind::Conv2d, "conv2d"},
    {OpKind::Conv3d, "conv3d"},
    {OpKind::DepthwiseConv2d, "depthwise_conv2d"},
    {OpKind::Dense, "dense"},
    {OpKind::BatchMatmul, "batch_matmul"},
    {OpKind::Softmax, "softmax"},
    {OpKind::Pooling, "pooling"},
    {OpKind::Relu, "relu"},
    {OpKind::Gelu, "gelu"},
    {OpKind::Sigmoid, "sigmoid"},
    {OpKind::Tanh, "tanh"},
    {OpKind::Add, "add"},
    {OpKind::Multiply, "multiply"},
    {OpKind::LayerNorm, "layer_norm"},
    {OpKind::BatchNorm, "batch_norm"},
    {OpKind::Embedding, "embedding"},
    {OpKind::Transpose, "transpose"},
    {OpKind::Reshape, "reshape"},
    {OpKind::Reduce, "reduce"},
}};

constexpr std::array<OpKind, 20> kAllKinds = {
    OpKind::Conv1d,   OpKind::Conv2d,   OpKind::Conv3d,    OpKind::DepthwiseConv2d,
    OpKind::Dense,    OpKind::BatchMatmul, OpKind::Softmax, OpKind::Pooling,
    OpKind::Relu,     OpKind::Gelu,     OpKind::Sigmoid,   OpKind::Tanh,
    OpKind::Add,      OpKind::Multiply, OpKind::LayerNorm, OpKind::BatchNorm,
    OpKind::Embedding, OpKind::Transpose, OpKind::Reshape, OpKind::Reduce,
};

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ModelFormatError(origin + ": " + what);
}

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  std::initializer_list<std::string_view> required,
                  const std::string& origin, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(origin, where + ": unknown field '" + key + "'");
    }
  }
  for (auto key : required) {
    if (!obj.contains(key)) {
      fail(origin, where + ": missing field '" + std::string(key) + "'");
    }
  }
}

std::int64_t get_int(const json& v, const std::string& origin, const std::string& where) {
  if (!v.is_number_integer()) fail(origin, where + ": expected an integer");
  return v.get<std::int64_t>();
}

OperatorNode parse_op(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_object()) fail(origin, where + ": expected an object");
  require_keys(j, {"op_kind", "input_shape", "attrs"}, {"op_kind", "input_shape"}, origin, where);

  OperatorNode op;
  if (!j["op_kind"].is_string()) fail(origin, where + ".op_kind: expected a string");
  const auto kind_name = j["op_kind"].get<std::string>();
  const auto kind = op_kind_from_string(kind_name);
  if (!kind) fail(origin, where + ".op_kind: unknown operator '" + kind_name + "'");
  op.op_kind = *kind;

  if (!j["input_shape"].is_array() || j["input_shape"].empty()) {
    fail(origin, where + ".input_shape: expected a non-empty array");
  }
  for (const auto& d : j["input_shape"]) {
    const auto dim = get_int(d, origin, where + ".input_shape");
    if (dim < 1) fail(origin, where + ".input_shape: dimension " + std::to_string(dim) + " < 1");
    op.input_shape.push_back(dim);
  }

  if (j.contains("attrs")) {
    if (!j["attrs"].is_object()) fail(origin, where + ".attrs: expected an object");
    for (const auto& [key, value] : j["attrs"].items()) {
      op.attrs[key] = get_int(value, origin, where + ".attrs." + key);
    }
  }
  return op;
}

SpaceDescriptor parse_knobs(const json& j, const std::string& origin, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(origin, where + ": expected a non-empty array");
  SpaceDescriptor space;
  int i = 0;
  for (const auto& kj : j) {
    const std::string kwhere = where + "[" + std::to_string(i++) + "]";
    if (!kj.is_object()) fail(origin, kwhere + ": expected an object");
    require_keys(kj, {"name", "values"}, {"name", "values"}, origin, kwhere);
    Knob knob;
    if (!kj["name"].is_string()) fail(origin, kwhere + ".name: expected a string");
    knob.name = kj["name"].get<std::string>();
    if (!kj["values"].is_array()) fail(origin, kwhere + ".values: expected an array");
    for (const auto& v : kj["values"]) {
      knob.values.push_back(get_int(v, origin, kwhere + ".values"));
    }
    space.knobs.push_back(std::move(knob));
  }
  try {
    validate_space(space, where);
  } catch (const std::exception& e) {
    fail(origin, e.what());
  }
  return space;
}

// Fallback when a file omits core_op: the node with the largest input rank,
// earliest on ties. Real compilers record the core operator during fusion;
// this only keeps hand-written files terse.
OpKind infer_core_op(const std::vector<OperatorNode>& ops) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < ops.size(); ++i) {
    if (ops[i].input_shape.size() > ops[best].input_shape.size()) best = i;
  }
  return ops[best].op_kind;
}

Subgraph parse_subgraph(const json& j, const std::string& origin, int index) {
  const std::string where = "subgraphs[" + std::to_string(index) + "]";
  if (!j.is_object()) fail(origin, where + ": expected an object");
  require_keys(j, {"ops", "core_op", "weight", "knobs"}, {"ops", "knobs"}, origin, where);

  Subgraph sg;
  if (!j["ops"].is_array() || j["ops"].empty()) {
    fail(origin, where + ".ops: expected a non-empty array");
  }
  int i = 0;
  for (const auto& oj : j["ops"]) {
    sg.ops.push_back(parse_op(oj, origin, where + ".ops[" + std::to_string(i++) + "]"));
  }

  if (j.contains("core_op")) {
    if (!j["core_op"].is_string()) fail(origin, where + ".core_op: expected a string");
    const auto name = j["core_op"].get<std::string>();
    const auto kind = op_kind_from_string(name);
    if (!kind) fail(origin, where + ".core_op: unknown operator '" + name + "'");
    sg.core_op = *kind;
  } else {
    sg.core_op = infer_core_op(sg.ops);
  }

  sg.weight = j.contains("weight") ? get_int(j["weight"], origin, where + ".weight") : 1;
  if (sg.weight < 1) fail(origin, where + ".weight: must be >= 1, got " + std::to_string(sg.weight));

  sg.knob_space = parse_knobs(j["knobs"], origin, where + ".knobs");
  return sg;
}

}  // namespace

std::string_view to_string(OpKind kind) {
  for (const auto& [k, name] : kOpNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<OpKind> op_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kOpNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::span<const OpKind> all_op_kinds() { return kAllKinds; }

std::string serialize_op(const OperatorNode& op) {
  std::ostringstream out;
  out << to_string(op.op_kind) << '[';
  for (std::size_t i = 0; i < op.input_shape.size(); ++i) {
    if (i) out << 'x';
    out << op.input_shape[i];
  }
  out << ';';
  bool first = true;
  for (const auto& [key, value] : op.attrs) {
    if (!first) out << ',';
    out << key << '=' << value;
    first = false;
  }
  out << ']';
  return out.str();
}

std::string serialize_ops(const Subgraph& sg) {
  std::string out;
  for (const auto& op : sg.ops) {
    if (!out.empty()) out += '|';
    out += serialize_op(op);
  }
  return out;
}

std::string serialize_op_sequence(const Subgraph& sg) {
  std::string out;
  for (const auto& op : sg.ops) {
    if (!out.empty()) out += ',';
    out += to_string(op.op_kind);
  }
  return out;
}

ModelGraph parse_model(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(origin + ": " + e.what());
  }
  if (!doc.is_object()) fail(origin, "top level: expected an object");
  require_keys(doc, {"name", "subgraphs"}, {"name", "subgraphs"}, origin, "top level");
  if (!doc["name"].is_string()) fail(origin, "name: expected a string");
  if (!doc["subgraphs"].is_array()) fail(origin, "subgraphs: expected an array");

  ModelGraph model;
  model.name = doc["name"].get<std::string>();
  int index = 0;
  for (const auto& sj : doc["subgraphs"]) {
    model.subgraphs.push_back(parse_subgraph(sj, origin, index++));
  }
  model.subgraphs = construct_subgraphs(model);
  validate_model(model);
  return model;
}

ModelGraph load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path);
}

std::vector<Subgraph> construct_subgraphs(const ModelGraph& model) {
  struct Entry {
    std::string sequence;
    std::string full;
    Subgraph sg;
  };
  std::vector<Entry> entries;
  entries.reserve(model.subgraphs.size());
  for (const auto& sg : model.subgraphs) {
    entries.push_back({serialize_op_sequence(sg), serialize_ops(sg), sg});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    return a.full < b.full;
  });

  std::vector<Subgraph> out;
  for (auto& e : entries) {
    if (!out.empty() && serialize_ops(out.back()) == e.full) {
      auto& prev = out.back();
      if (prev.core_op != e.sg.core_op) {
        throw ModelFormatError("duplicate subgraph '" + e.full +
                               "' declares conflicting core_op values");
      }
      if (prev.knob_space.knobs.size() != e.sg.knob_space.knobs.size() ||
          ![&] {
            for (std::size_t k = 0; k < prev.knob_space.knobs.size(); ++k) {
              if (prev.knob_space.knobs[k].values != e.sg.knob_space.knobs[k].values) return false;
            }
            return true;
          }()) {
        throw ModelFormatError("duplicate subgraph '" + e.full +
                               "' declares conflicting knob spaces");
      }
      prev.weight += e.sg.weight;
      continue;
    }
    out.push_back(std::move(e.sg));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

void validate_model(const ModelGraph& model) {
  const auto n = model.subgraphs.size();
  if (n < 1 || n > static_cast<std::size_t>(kMaxSubgraphs)) {
    throw ModelFormatError("model '" + model.name + "': subgraph count " + std::to_string(n) +
                           " outside [1, " + std::to_string(kMaxSubgraphs) + "]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sg = model.subgraphs[i];
    const std::string where = "model '" + model.name + "' subgraph " + std::to_string(i);
    if (sg.id != static_cast<int>(i)) {
      throw ModelFormatError(where + ": id " + std::to_string(sg.id) + " not contiguous");
    }
    if (sg.ops.empty()) throw ModelFormatError(where + ": empty op list");
    if (sg.weight < 1) throw ModelFormatError(where + ": weight < 1");
    for (const auto& op : sg.ops) {
      if (op.input_shape.empty()) throw ModelFormatError(where + ": op with empty shape");
      for (auto d : op.input_shape) {
        if (d < 1) throw ModelFormatError(where + ": shape dimension " + std::to_string(d) + " < 1");
      }
    }
    const bool core_present = std::any_of(sg.ops.begin(), sg.ops.end(), [&](const OperatorNode& op) {
      return op.op_kind == sg.core_op;
    });
    if (!core_present) {
      throw ModelFormatError(where + ": core_op '" + std::string(to_string(sg.core_op)) +
                             "' not present in ops");
    }
    validate_space(sg.knob_space, where);
  }
  // Dedup invariant: no two subgraphs share a serialization.
  std::vector<std::string> serials;
  serials.reserve(n);
  for (const auto& sg : model.subgraphs) serials.push_back(serialize_ops(sg));
  std::sort(serials.begin(), serials.end());
  if (std::adjacent_find(serials.begin(), serials.end()) != serials.end()) {
    throw ModelFormatError("model '" + model.name + "': duplicate subgraphs not merged");
  }
}

double model_latency(const ModelGraph& model, std::span<const double> best_latency_ms) {
  if (best_latency_ms.size() != model.subgraphs.size()) {
    throw std::invalid_argument("model_latency: best-latency vector length mismatch");
  }
  double total = 0.0;
  for (const auto& sg : model.subgraphs) {
    total += static_cast<double>(sg.weight) * best_latency_ms[static_cast<std::size_t>(sg.id)];
  }
  return total;
}

int max_feature_dim(const ModelGraph& model) {
  int d = 0;
  for (const auto& sg : model.subgraphs) {
    d = std::max(d, feature_dim(static_cast<int>(sg.knob_space.knobs.size())));
  }
  return d;
}

}  // namespace famtune
