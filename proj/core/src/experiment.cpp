#include "famtune/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace famtune {
namespace {

constexpr std::uint64_t kSampleStream = 0xE5;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Draw up to `count` distinct candidates for one subgraph, measure them with
// an experiment-owned noise stream, and return the records shuffled. Uses the
// full space when it is smaller than the request.
std::vector<MeasurementRecord> draw_samples(const ModelGraph& model, const Landscape& landscape,
                                            int subgraph_id, int count, std::uint64_t seed,
                                            int pad_dim) {
  const auto& sg = model.subgraphs[static_cast<std::size_t>(subgraph_id)];
  auto rng = make_rng(seed, kSampleStream, static_cast<std::uint64_t>(subgraph_id));
  MeasuredSet empty;
  auto pool = generate_candidates(sg.knob_space, subgraph_id, empty, count, 0, rng);
  shuffle(pool, rng);

  std::vector<MeasurementRecord> records;
  records.reserve(pool.size());
  for (const auto& candidate : pool) {
    MeasurementRecord rec;
    rec.candidate = candidate;
    rec.features = featurize(sg.knob_space, candidate.assignment, pad_dim);
    rec.latency_ms = measure(landscape, sg, candidate, rng);
    records.push_back(std::move(rec));
  }
  return records;
}

struct Split {
  std::vector<MeasurementRecord> train;
  std::vector<MeasurementRecord> validation;
};

Split split_80_20(std::vector<MeasurementRecord> records) {
  Split split;
  const std::size_t n_train = records.size() * 8 / 10;
  split.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(records.begin() + static_cast<std::ptrdiff_t>(n_train), records.end());
  return split;
}

CostModelState train_on(std::span<const MeasurementRecord> records, int tag,
                        const GbtParams& params) {
  auto model = initialize_cost_model(tag, params);
  train_cost_model(records, model);
  return model;
}

double accuracy_or_nan(const CostModelState& model, std::span<const MeasurementRecord> validation,
                       int* pairs_out = nullptr) {
  try {
    const double acc = pairwise_accuracy(model, validation);
    if (pairs_out) {
      int counted = 0;
      for (std::size_t i = 0; i < validation.size(); ++i) {
        for (std::size_t j = i + 1; j < validation.size(); ++j) {
          const double li = validation[i].latency_ms;
          const double lj = validation[j].latency_ms;
          if (std::abs(li - lj) / std::max(li, lj) >= 1e-6) ++counted;
        }
      }
      *pairs_out = counted;
    }
    return acc;
  } catch (const std::domain_error&) {
    if (pairs_out) *pairs_out = 0;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::vector<Split> per_subgraph_splits(const ModelGraph& model, const Landscape& landscape,
                                       std::span<const int> samples_per_subgraph,
                                       std::uint64_t seed) {
  const int pad_dim = max_feature_dim(model);
  std::vector<Split> splits;
  splits.reserve(model.subgraphs.size());
  for (const auto& sg : model.subgraphs) {
    const int requested = samples_per_subgraph[static_cast<std::size_t>(sg.id)];
    if (requested < 32) {
      throw std::invalid_argument("accuracy experiments need >= 32 samples per subgraph");
    }
    splits.push_back(split_80_20(draw_samples(model, landscape, sg.id, requested, seed, pad_dim)));
  }
  return splits;
}

std::int64_t first_b_reaching(const TunerState& state, double target_ms) {
  for (const auto& point : state.curve) {
    if (point.model_latency_ms <= target_ms) return point.b;
  }
  return -1;
}

double first_wall_reaching(const TunerState& state, double target_ms) {
  for (const auto& point : state.curve) {
    if (point.model_latency_ms <= target_ms) return point.wall_seconds;
  }
  return -1.0;
}

}  // namespace

std::string HeatmapResult::to_csv() const {
  std::ostringstream out;
  out << "model_subgraph";
  for (int col = 0; col < n; ++col) out << ",acc_on_" << col;
  out << '\n';
  for (int row = 0; row < n; ++row) {
    out << row;
    for (int col = 0; col < n; ++col) {
      const double v = cell(row, col);
      out << ',' << (std::isnan(v) ? "undefined" : fmt(v));
    }
    out << '\n';
  }
  return out.str();
}

HeatmapResult run_heatmap(const ModelGraph& model, const Landscape& landscape,
                          int samples_per_subgraph, std::uint64_t seed, const GbtParams& params) {
  const int n = static_cast<int>(model.subgraphs.size());
  const std::vector<int> counts(static_cast<std::size_t>(n), samples_per_subgraph);
  const auto splits = per_subgraph_splits(model, landscape, counts, seed);

  std::vector<CostModelState> models;
  models.reserve(static_cast<std::size_t>(n));
  for (int sid = 0; sid < n; ++sid) {
    models.push_back(train_on(splits[static_cast<std::size_t>(sid)].train, sid, params));
  }

  HeatmapResult result;
  result.n = n;
  result.accuracy.resize(static_cast<std::size_t>(n * n));
  result.pair_count.resize(static_cast<std::size_t>(n * n));
  result.sample_count.resize(static_cast<std::size_t>(n));
  for (int sid = 0; sid < n; ++sid) {
    const auto& split = splits[static_cast<std::size_t>(sid)];
    result.sample_count[static_cast<std::size_t>(sid)] =
        static_cast<int>(split.train.size() + split.validation.size());
  }
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      int pairs = 0;
      result.accuracy[static_cast<std::size_t>(row * n + col)] = accuracy_or_nan(
          models[static_cast<std::size_t>(row)], splits[static_cast<std::size_t>(col)].validation,
          &pairs);
      result.pair_count[static_cast<std::size_t>(row * n + col)] = pairs;
    }
  }
  return result;
}

std::string AccuracyBars::to_csv() const {
  std::ostringstream out;
  out << "subgraph_id,train_samples,monolithic_acc,individual_acc";
  if (has_family) out << ",family_acc";
  out << '\n';
  for (const auto& row : rows) {
    out << row.subgraph_id << ',' << row.train_samples << ',' << fmt(row.monolithic) << ','
        << fmt(row.individual);
    if (has_family) out << ',' << fmt(row.family);
    out << '\n';
  }
  return out.str();
}

AccuracyBars run_accuracy_bars(const ModelGraph& model, const Landscape& landscape,
                               std::span<const int> samples_per_subgraph, std::uint64_t seed,
                               const GbtParams& params, const FamilyRegistry* families) {
  const int n = static_cast<int>(model.subgraphs.size());
  const auto splits = per_subgraph_splits(model, landscape, samples_per_subgraph, seed);

  std::vector<MeasurementRecord> union_train;
  for (const auto& split : splits) {
    union_train.insert(union_train.end(), split.train.begin(), split.train.end());
  }
  const auto monolithic = train_on(union_train, kMonolithicModel, params);

  std::vector<CostModelState> family_models;
  if (families) {
    for (int fam = 0; fam < families->family_count(); ++fam) {
      std::vector<MeasurementRecord> family_train;
      for (int sid : families->family(fam).member_ids) {
        const auto& t = splits[static_cast<std::size_t>(sid)].train;
        family_train.insert(family_train.end(), t.begin(), t.end());
      }
      family_models.push_back(train_on(family_train, fam, params));
    }
  }

  AccuracyBars bars;
  bars.has_family = families != nullptr;
  for (int sid = 0; sid < n; ++sid) {
    const auto& split = splits[static_cast<std::size_t>(sid)];
    AccuracyBars::Row row;
    row.subgraph_id = sid;
    row.train_samples = static_cast<int>(split.train.size());
    row.monolithic = accuracy_or_nan(monolithic, split.validation);
    row.individual = accuracy_or_nan(train_on(split.train, sid, params), split.validation);
    if (families) {
      row.family = accuracy_or_nan(family_models[static_cast<std::size_t>(families->family_of(sid))],
                                   split.validation);
    }
    bars.rows.push_back(row);
  }
  return bars;
}

AccuracyBars run_accuracy_bars(const ModelGraph& model, const Landscape& landscape,
                               int samples_per_subgraph, std::uint64_t seed,
                               const GbtParams& params, const FamilyRegistry* families) {
  const std::vector<int> counts(model.subgraphs.size(), samples_per_subgraph);
  return run_accuracy_bars(model, landscape, counts, seed, params, families);
}

std::string ComparisonReport::to_csv() const {
  std::ostringstream out;
  // Performance fraction x of the baseline's final result corresponds to the
  // latency target final/x (performance = 1/latency).
  out << "performance_fraction,target_latency_ms,baseline_b,foresee_b,budget_ratio,"
         "baseline_wall_s,foresee_wall_s,wall_ratio\n";
  for (const auto& hit : thresholds) {
    out << fmt(hit.performance_fraction) << ',' << fmt(hit.target_latency_ms) << ','
        << hit.baseline_b << ',' << hit.foresee_b << ',' << fmt(hit.budget_ratio) << ','
        << fmt(hit.baseline_wall) << ',' << fmt(hit.foresee_wall) << ',' << fmt(hit.wall_ratio)
        << '\n';
  }
  return out.str();
}

ComparisonReport run_compare(const ModelGraph& model, const Landscape& landscape,
                             const CompareConfig& config) {
  TuneOptions options = config.tune;
  options.budget = config.budget;
  options.foresee_p = config.foresee_p;
  options.seed = config.seed;

  ComparisonReport report;
  {
    SimBackend backend(model, landscape, config.seed, config.clock, config.workers);
    TuningEngine engine(backend, make_baseline_policy(config.cluster_algo, config.potential),
                        options);
    report.baseline = engine.run();
  }
  {
    SimBackend backend(model, landscape, config.seed, config.clock, config.workers);
    TuningEngine engine(backend, make_foresee_policy(config.cluster_algo, config.potential),
                        options);
    report.foresee = engine.run();
  }

  report.baseline_final_ms = report.baseline.curve.back().model_latency_ms;
  report.foresee_final_ms = report.foresee.curve.back().model_latency_ms;

  const std::array<double, 3> fractions = {0.8, 0.9, 1.0};
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    ThresholdHit hit;
    hit.performance_fraction = fractions[i];
    hit.target_latency_ms = report.baseline_final_ms / fractions[i];
    hit.baseline_b = first_b_reaching(report.baseline, hit.target_latency_ms);
    hit.foresee_b = first_b_reaching(report.foresee, hit.target_latency_ms);
    hit.baseline_wall = first_wall_reaching(report.baseline, hit.target_latency_ms);
    hit.foresee_wall = first_wall_reaching(report.foresee, hit.target_latency_ms);
    if (hit.baseline_b >= 0 && hit.foresee_b >= 0) {
      hit.budget_ratio = hit.foresee_b == 0
                             ? std::numeric_limits<double>::infinity()
                             : static_cast<double>(hit.baseline_b) / static_cast<double>(hit.foresee_b);
      hit.wall_ratio = hit.foresee_wall == 0.0
                           ? std::numeric_limits<double>::infinity()
                           : hit.baseline_wall / hit.foresee_wall;
    }
    report.thresholds[i] = hit;
  }
  return report;
}

std::string BudgetReport::to_csv() const {
  std::ostringstream out;
  out << "subgraph_id,weight,measurements,share,first_latency_ms,best_latency_ms,"
         "last_improvement_at,plateaued,exhausted\n";
  for (const auto& row : rows) {
    out << row.subgraph_id << ',' << row.weight << ',' << row.measurements << ','
        << fmt(row.share) << ',' << fmt(row.first_latency_ms) << ',' << fmt(row.best_latency_ms)
        << ',' << row.last_improvement_at << ',' << (row.plateaued ? 1 : 0) << ','
        << (row.exhausted ? 1 : 0) << '\n';
  }
  return out.str();
}

BudgetReport run_budget_report(const TunerState& state, const ModelGraph& model) {
  BudgetReport report;
  report.total_measurements = state.b;
  for (const auto& sg : model.subgraphs) {
    const auto& st = state.per_subgraph[static_cast<std::size_t>(sg.id)];
    BudgetReportRow row;
    row.subgraph_id = sg.id;
    row.weight = sg.weight;
    row.measurements = st.spent;
    row.share = state.b > 0 ? static_cast<double>(st.spent) / static_cast<double>(state.b) : 0.0;
    row.first_latency_ms = st.records.empty() ? st.best_latency_ms : st.records.front().latency_ms;
    row.best_latency_ms = st.best_latency_ms;
    row.last_improvement_at = st.last_improvement_spent;
    row.exhausted = st.exhausted;
    row.plateaued = !st.exhausted && st.spent > 0 &&
                    static_cast<double>(st.last_improvement_spent) <=
                        0.75 * static_cast<double>(st.spent);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace famtune
