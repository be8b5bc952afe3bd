#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "famtune/searchspace.hpp"

namespace famtune {

// Learned latency regressor: gradient-boosted regression trees over candidate
// feature vectors, target = log(latency). One model per subgraph family (or a
// single monolithic one). Each training call refits from scratch on the full
// accumulated sample set; the fit is deterministic and invariant to the order
// records arrived in.

inline constexpr int kMonolithicModel = -1;

struct GbtParams {
  int trees = 50;
  int depth = 3;                // max split levels; up to 2^depth leaves
  double learning_rate = 0.1;
  int min_samples_split = 2;    // nodes smaller than this become leaves
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double eval(std::span<const double> features) const;
};

struct TrainingSample {
  std::vector<double> features;
  double target = 0.0;  // log latency
};

struct CostModelState {
  int family_id = kMonolithicModel;
  GbtParams params;
  double base_prediction = 0.0;  // mean target; 0 before any training
  std::vector<RegressionTree> trees;
  std::vector<TrainingSample> training_set;
  std::vector<double> train_mse_by_round;  // filled by the latest fit

  bool trained() const { return !training_set.empty(); }
};

CostModelState initialize_cost_model(int family_id, GbtParams params = {});

/// Append records (target = log latency) and refit the ensemble from scratch
/// on the accumulated set. Records must be non-empty with positive latencies.
void train_cost_model(std::span<const MeasurementRecord> records, CostModelState& model);

/// Fit on an explicit (features, target) set; the training path used by
/// train_cost_model and the experiment harnesses.
void fit(CostModelState& model);

/// Predicted log-latency: base + lr * sum of tree outputs. Lower is better.
double predict(const CostModelState& model, std::span<const double> features);

/// Fraction of unordered validation pairs the model orders like the measured
/// latencies. Pairs with relative latency difference < 1e-6 are excluded;
/// predicted ties score one half. Throws std::domain_error when every pair is
/// excluded.
double pairwise_accuracy(const CostModelState& model,
                         std::span<const MeasurementRecord> validation);

/// Human-readable tree listing for debugging.
std::string dump_model(const CostModelState& model);

}  // namespace famtune
