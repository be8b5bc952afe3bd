#include "famtune/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace famtune {
namespace {

// The fit must be invariant to the order records arrived in, down to the
// bit. All sample indices below are positions in a canonical order (sorted by
// feature vector, then target), every sum runs in that order, and split
// thresholds sit exactly on data values so eval() reproduces the partition.

struct FitContext {
  const std::vector<TrainingSample>* samples = nullptr;
  std::vector<int> canonical;  // canonical position -> training_set index

  double x(int pos, int feature) const {
    return (*samples)[static_cast<std::size_t>(canonical[static_cast<std::size_t>(pos)])]
        .features[static_cast<std::size_t>(feature)];
  }
  double target(int pos) const {
    return (*samples)[static_cast<std::size_t>(canonical[static_cast<std::size_t>(pos)])].target;
  }
};

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double sum_residuals(const std::vector<int>& positions, std::span<const double> residual) {
  double s = 0.0;
  for (int p : positions) s += residual[static_cast<std::size_t>(p)];
  return s;
}

Split best_split(const FitContext& ctx, const std::vector<std::vector<int>>& order,
                 std::span<const double> residual, int min_samples_split) {
  Split best;
  const int n = static_cast<int>(order[0].size());
  if (n < min_samples_split) return best;
  const double total = sum_residuals(order[0], residual);
  const double parent_score = total * total / n;

  for (int f = 0; f < static_cast<int>(order.size()); ++f) {
    const auto& list = order[static_cast<std::size_t>(f)];
    double left_sum = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
      left_sum += residual[static_cast<std::size_t>(list[static_cast<std::size_t>(j)])];
      const double v = ctx.x(list[static_cast<std::size_t>(j)], f);
      const double v_next = ctx.x(list[static_cast<std::size_t>(j + 1)], f);
      if (v == v_next) continue;  // only split between distinct values
      const int left_cnt = j + 1;
      const int right_cnt = n - left_cnt;
      const double right_sum = total - left_sum;
      const double gain =
          left_sum * left_sum / left_cnt + right_sum * right_sum / right_cnt - parent_score;
      // Strict > with ascending feature/threshold scan implements the
      // lower-feature, lower-threshold tie rule.
      if (gain > best.gain) {
        best = {gain, f, v};
      }
    }
  }
  return best;
}

int build_node(RegressionTree& tree, const FitContext& ctx, std::vector<std::vector<int>>&& order,
               std::span<const double> residual, std::span<double> prediction, int depth,
               const GbtParams& params) {
  const int n = static_cast<int>(order[0].size());
  Split split;
  if (depth < params.depth && n >= params.min_samples_split) {
    split = best_split(ctx, order, residual, params.min_samples_split);
  }

  const int node_index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  if (split.feature < 0 || split.gain <= 0.0) {
    const double value = sum_residuals(order[0], residual) / n;
    tree.nodes[static_cast<std::size_t>(node_index)].value = value;
    for (int p : order[0]) {
      prediction[static_cast<std::size_t>(p)] += params.learning_rate * value;
    }
    return node_index;
  }

  const int d = static_cast<int>(order.size());
  std::vector<std::vector<int>> left(static_cast<std::size_t>(d));
  std::vector<std::vector<int>> right(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) {
    for (int p : order[static_cast<std::size_t>(f)]) {
      if (ctx.x(p, split.feature) <= split.threshold) {
        left[static_cast<std::size_t>(f)].push_back(p);
      } else {
        right[static_cast<std::size_t>(f)].push_back(p);
      }
    }
  }
  order.clear();

  const int left_index =
      build_node(tree, ctx, std::move(left), residual, prediction, depth + 1, params);
  const int right_index =
      build_node(tree, ctx, std::move(right), residual, prediction, depth + 1, params);

  auto& node = tree.nodes[static_cast<std::size_t>(node_index)];
  node.feature = split.feature;
  node.threshold = split.threshold;
  node.left = left_index;
  node.right = right_index;
  return node_index;
}

void dump_node(const RegressionTree& tree, int index, int indent, std::ostringstream& out) {
  const auto& node = tree.nodes[static_cast<std::size_t>(index)];
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (node.is_leaf()) {
    out << "leaf value=" << node.value << '\n';
    return;
  }
  out << "x[" << node.feature << "] <= " << node.threshold << '\n';
  dump_node(tree, node.left, indent + 1, out);
  dump_node(tree, node.right, indent + 1, out);
}

}  // namespace

double RegressionTree::eval(std::span<const double> features) const {
  int index = 0;
  for (;;) {
    const auto& node = nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf()) return node.value;
    index = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                               : node.right;
  }
}

CostModelState initialize_cost_model(int family_id, GbtParams params) {
  CostModelState model;
  model.family_id = family_id;
  model.params = params;
  return model;
}

void fit(CostModelState& model) {
  const int n = static_cast<int>(model.training_set.size());
  model.trees.clear();
  model.train_mse_by_round.clear();
  if (n == 0) {
    model.base_prediction = 0.0;
    return;
  }

  FitContext ctx;
  ctx.samples = &model.training_set;
  ctx.canonical.resize(static_cast<std::size_t>(n));
  std::iota(ctx.canonical.begin(), ctx.canonical.end(), 0);
  std::sort(ctx.canonical.begin(), ctx.canonical.end(), [&](int a, int b) {
    const auto& sa = model.training_set[static_cast<std::size_t>(a)];
    const auto& sb = model.training_set[static_cast<std::size_t>(b)];
    if (sa.features != sb.features) {
      return std::lexicographical_compare(sa.features.begin(), sa.features.end(),
                                          sb.features.begin(), sb.features.end());
    }
    return sa.target < sb.target;
  });

  const int d = static_cast<int>(model.training_set.front().features.size());
  for (const auto& sample : model.training_set) {
    if (static_cast<int>(sample.features.size()) != d) {
      throw std::invalid_argument("cost model: inconsistent feature dimensions in training set");
    }
    for (double v : sample.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("cost model: non-finite feature");
    }
  }

  double mean = 0.0;
  for (int p = 0; p < n; ++p) mean += ctx.target(p);
  mean /= n;
  model.base_prediction = mean;

  std::vector<double> prediction(static_cast<std::size_t>(n), mean);
  std::vector<double> residual(static_cast<std::size_t>(n));

  // One presort per feature, shared by every boosting round.
  std::vector<std::vector<int>> presorted(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) {
    auto& list = presorted[static_cast<std::size_t>(f)];
    list.resize(static_cast<std::size_t>(n));
    std::iota(list.begin(), list.end(), 0);
    std::stable_sort(list.begin(), list.end(),
                     [&](int a, int b) { return ctx.x(a, f) < ctx.x(b, f); });
  }

  for (int round = 0; round < model.params.trees; ++round) {
    for (int p = 0; p < n; ++p) {
      residual[static_cast<std::size_t>(p)] = ctx.target(p) - prediction[static_cast<std::size_t>(p)];
    }
    RegressionTree tree;
    auto order = presorted;
    build_node(tree, ctx, std::move(order), residual, prediction, 0, model.params);

    // Nothing left to fit: a single zero leaf would repeat forever.
    if (tree.nodes.size() == 1 && tree.nodes[0].value == 0.0) break;

    model.trees.push_back(std::move(tree));
    double mse = 0.0;
    for (int p = 0; p < n; ++p) {
      const double e = ctx.target(p) - prediction[static_cast<std::size_t>(p)];
      mse += e * e;
    }
    model.train_mse_by_round.push_back(mse / n);
  }
}

void train_cost_model(std::span<const MeasurementRecord> records, CostModelState& model) {
  if (records.empty()) {
    throw std::invalid_argument("train_cost_model: empty record batch");
  }
  for (const auto& rec : records) {
    if (!(rec.latency_ms > 0.0)) {
      throw std::invalid_argument("train_cost_model: non-positive latency");
    }
    model.training_set.push_back({rec.features, std::log(rec.latency_ms)});
  }
  fit(model);
}

double predict(const CostModelState& model, std::span<const double> features) {
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("predict: non-finite feature");
  }
  double score = model.base_prediction;
  for (const auto& tree : model.trees) {
    score += model.params.learning_rate * tree.eval(features);
  }
  return score;
}

double pairwise_accuracy(const CostModelState& model,
                         std::span<const MeasurementRecord> validation) {
  if (validation.size() < 2) {
    throw std::invalid_argument("pairwise_accuracy: need at least two validation records");
  }
  std::vector<double> score(validation.size());
  for (std::size_t i = 0; i < validation.size(); ++i) {
    score[i] = predict(model, validation[i].features);
  }
  double credit = 0.0;
  std::int64_t counted = 0;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    for (std::size_t j = i + 1; j < validation.size(); ++j) {
      const double li = validation[i].latency_ms;
      const double lj = validation[j].latency_ms;
      const double rel = std::abs(li - lj) / std::max(li, lj);
      if (rel < 1e-6) continue;
      ++counted;
      if (score[i] == score[j]) {
        credit += 0.5;  // predicted tie: random order gets half
      } else if ((score[i] < score[j]) == (li < lj)) {
        credit += 1.0;
      }
    }
  }
  if (counted == 0) {
    throw std::domain_error("pairwise_accuracy: all validation pairs excluded as ties");
  }
  return credit / static_cast<double>(counted);
}

std::string dump_model(const CostModelState& model) {
  std::ostringstream out;
  out << "cost model family=" << model.family_id << " trees=" << model.trees.size()
      << " base=" << model.base_prediction << " lr=" << model.params.learning_rate << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "tree " << t << ":\n";
    dump_node(model.trees[t], 0, 1, out);
  }
  return out.str();
}

}  // namespace famtune
