#include "famtune/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace famtune {
namespace {

constexpr std::uint64_t kGenStream = 0xD4;

void format_double(std::ostringstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out << buf;
}

}  // namespace

Policy make_foresee_policy(ClusterAlgo algo, PotentialFn potential) {
  Policy p;
  p.mode = PolicyMode::Foresee;
  p.potential = potential;
  p.cluster_algo = algo;
  p.granularity = ModelGranularity::PerFamily;
  p.foresee_phase = true;
  return p;
}

Policy make_baseline_policy(ClusterAlgo algo, PotentialFn potential) {
  Policy p;
  p.mode = PolicyMode::Monolithic;
  p.potential = potential;
  p.cluster_algo = algo;
  p.granularity = ModelGranularity::Monolithic;
  p.foresee_phase = false;
  return p;
}

double TunerState::model_latency_now(const ModelGraph& model) const {
  std::vector<double> bests(per_subgraph.size());
  for (std::size_t i = 0; i < per_subgraph.size(); ++i) bests[i] = per_subgraph[i].best_latency_ms;
  return model_latency(model, bests);
}

std::string curve_to_csv(const TunerState& state) {
  std::ostringstream out;
  out << "b,sim_wall_seconds,model_latency_ms,phase,tuned_subgraph_id\n";
  for (const auto& point : state.curve) {
    out << point.b << ',';
    format_double(out, point.wall_seconds);
    out << ',';
    format_double(out, point.model_latency_ms);
    out << ',' << point.phase << ',' << point.tuned_subgraph << '\n';
  }
  return out.str();
}

double calculate_potential(const TunerState& state, const Subgraph& sg, PotentialFn fn) {
  const auto& st = state.per_subgraph[static_cast<std::size_t>(sg.id)];
  if (!st.measured_any) return std::numeric_limits<double>::infinity();
  const double weight = static_cast<double>(sg.weight);
  switch (fn) {
    case PotentialFn::LatencyGreedy:
      return weight * st.best_latency_ms;
    case PotentialFn::Gradient: {
      // Backward: realized improvement rate over the last tune step.
      // Forward: optimistic rate if the remaining latency vanished at the
      // historical cost per measurement.
      const double backward =
          st.last_step_measurements > 0
              ? (st.prev_best_latency_ms - st.best_latency_ms) /
                    static_cast<double>(st.last_step_measurements)
              : 0.0;
      const double forward =
          st.spent > 0 ? st.best_latency_ms / static_cast<double>(st.spent) : 0.0;
      return weight * std::max(backward, forward);
    }
  }
  throw std::invalid_argument("unknown potential function");
}

int select_bottleneck(std::span<const int> scope, const TunerState& state,
                      const ModelGraph& model, PotentialFn fn) {
  if (scope.empty()) throw std::invalid_argument("select_bottleneck: empty scope");
  int best_id = -1;
  double best_potential = -std::numeric_limits<double>::infinity();
  for (int sid : scope) {
    const auto& st = state.per_subgraph[static_cast<std::size_t>(sid)];
    if (st.exhausted) continue;
    const double p = calculate_potential(state, model.subgraphs[static_cast<std::size_t>(sid)], fn);
    if (p > best_potential || (p == best_potential && sid < best_id)) {
      best_potential = p;
      best_id = sid;
    }
  }
  return best_id;
}

TuningEngine::TuningEngine(SimBackend& backend, Policy policy, TuneOptions options)
    : backend_(backend),
      model_(backend.model()),
      policy_(policy),
      options_(options),
      registry_(build_registry(policy.cluster_algo, model_.subgraphs)) {
  if (!(options_.foresee_p > 0.0 && options_.foresee_p < 1.0)) {
    throw std::invalid_argument("foresee proportion must satisfy 0 < p < 1");
  }
  const auto n = static_cast<std::int64_t>(model_.subgraphs.size());
  if (options_.budget < n) {
    throw std::invalid_argument("budget " + std::to_string(options_.budget) +
                                " smaller than subgraph count " + std::to_string(n));
  }
  if (options_.pool_random + options_.pool_evolved < 1) {
    throw std::invalid_argument("candidate pool must be non-empty");
  }
  if (!(options_.epsilon_explore >= 0.0 && options_.epsilon_explore < 1.0)) {
    throw std::invalid_argument("epsilon share must be in [0, 1)");
  }

  if (policy_.granularity == ModelGranularity::Monolithic) {
    models_.push_back(initialize_cost_model(kMonolithicModel, options_.cost_model));
  } else {
    models_.reserve(static_cast<std::size_t>(registry_.family_count()));
    for (int fam = 0; fam < registry_.family_count(); ++fam) {
      models_.push_back(initialize_cost_model(fam, options_.cost_model));
    }
  }
  gen_streams_.reserve(model_.subgraphs.size());
  for (std::size_t sid = 0; sid < model_.subgraphs.size(); ++sid) {
    gen_streams_.push_back(make_rng(options_.seed, kGenStream, sid));
  }
  init_state();
}

CostModelState& TuningEngine::model_for(int subgraph_id) {
  if (policy_.granularity == ModelGranularity::Monolithic) return models_.front();
  return models_[static_cast<std::size_t>(registry_.family_of(subgraph_id))];
}

void TuningEngine::init_state() {
  state_ = TunerState{};
  state_.budget = options_.budget;
  state_.p = options_.foresee_p;
  state_.g = static_cast<int>(
      std::min<std::int64_t>(64, options_.budget / static_cast<std::int64_t>(model_.subgraphs.size())));
  state_.per_subgraph.resize(model_.subgraphs.size());
  for (const auto& sg : model_.subgraphs) {
    auto& st = state_.per_subgraph[static_cast<std::size_t>(sg.id)];
    st.best_candidate = default_candidate(sg.knob_space, sg.id);
    st.best_latency_ms = backend_.default_latency(sg.id);
    st.prev_best_latency_ms = st.best_latency_ms;
  }
  record_point("init", -1);
}

void TuningEngine::record_point(const char* phase, int subgraph_id) {
  CurvePoint point;
  point.b = state_.b;
  point.wall_seconds = backend_.clock().now;
  point.model_latency_ms = state_.model_latency_now(model_);
  point.phase = phase;
  point.tuned_subgraph = subgraph_id;
  state_.curve.push_back(std::move(point));
}

std::vector<MeasurementRecord> TuningEngine::tune_step(int subgraph_id, CostModelState& cm,
                                                       int g_eff) {
  if (g_eff < 1) throw std::invalid_argument("tune_step: g_eff must be >= 1");
  const auto& sg = model_.subgraphs[static_cast<std::size_t>(subgraph_id)];
  auto& st = state_.per_subgraph[static_cast<std::size_t>(subgraph_id)];
  auto& rng = gen_streams_[static_cast<std::size_t>(subgraph_id)];

  auto pool = generate_candidates(sg.knob_space, subgraph_id, st.measured, options_.pool_random,
                                  options_.pool_evolved, rng);
  if (pool.empty()) {
    st.exhausted = true;
    return {};
  }

  std::vector<Candidate> batch;
  if (static_cast<int>(pool.size()) <= g_eff) {
    batch = std::move(pool);
  } else {
    std::vector<std::pair<double, std::size_t>> scored(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto features = featurize(sg.knob_space, pool[i].assignment, backend_.feature_pad_dim());
      scored[i] = {predict(cm, features), i};
    }
    std::sort(scored.begin(), scored.end());

    // Epsilon slots come uniformly from the pool's tail, the candidates the
    // model did not rank into the batch.
    const int explore = static_cast<int>(static_cast<double>(g_eff) * options_.epsilon_explore);
    const int by_score = g_eff - explore;
    batch.reserve(static_cast<std::size_t>(g_eff));
    for (int i = 0; i < by_score; ++i) {
      batch.push_back(pool[scored[static_cast<std::size_t>(i)].second]);
    }
    if (explore > 0) {
      std::vector<std::size_t> tail;
      tail.reserve(scored.size() - static_cast<std::size_t>(by_score));
      for (std::size_t i = static_cast<std::size_t>(by_score); i < scored.size(); ++i) {
        tail.push_back(scored[i].second);
      }
      for (int e = 0; e < explore; ++e) {
        const auto pick = uniform_below(rng, tail.size() - static_cast<std::size_t>(e));
        batch.push_back(pool[tail[pick]]);
        std::swap(tail[pick], tail[tail.size() - 1 - static_cast<std::size_t>(e)]);
      }
    }
  }

  auto records = backend_.run_batch(batch);
  for (const auto& rec : records) {
    const auto key = linear_index(sg.knob_space, rec.candidate.assignment);
    st.measured.add(key, rec.latency_ms);
    st.spent += 1;
    st.measured_any = true;
    if (rec.latency_ms < st.best_latency_ms) {
      st.best_latency_ms = rec.latency_ms;
      st.best_candidate = rec.candidate;
      st.last_improvement_spent = st.spent;
    }
  }
  st.records.insert(st.records.end(), records.begin(), records.end());
  if (st.measured.size() == space_size(sg.knob_space)) st.exhausted = true;
  return records;
}

void TuningEngine::train_and_charge(std::span<const MeasurementRecord> records,
                                    CostModelState& cm) {
  train_cost_model(records, cm);
  backend_.charge_training(static_cast<std::int64_t>(cm.training_set.size()),
                           options_.cm_accelerated);
}

TunerState TuningEngine::run() {
  std::vector<int> all_ids(model_.subgraphs.size());
  std::iota(all_ids.begin(), all_ids.end(), 0);

  while (state_.b < state_.budget) {
    const int s_cur = select_bottleneck(all_ids, state_, model_, policy_.potential);
    if (s_cur < 0) break;  // every space exhausted

    auto& st_cur_before = state_.per_subgraph[static_cast<std::size_t>(s_cur)];
    const double prev_best = st_cur_before.best_latency_ms;
    auto& cm = model_for(s_cur);
    const auto records = tune_step(s_cur, cm, state_.g);
    if (!records.empty()) {
      auto& st = state_.per_subgraph[static_cast<std::size_t>(s_cur)];
      st.prev_best_latency_ms = prev_best;
      st.last_step_measurements = static_cast<std::int64_t>(records.size());
      state_.b += static_cast<std::int64_t>(records.size());
      st.best_history.emplace_back(state_.b, st.best_latency_ms);
      train_and_charge(records, cm);
      record_point("main", s_cur);
    }

    if (!policy_.foresee_phase) continue;
    const auto& family = find_family(s_cur, registry_);
    if (family.member_ids.size() <= 1) continue;

    std::vector<int> siblings;
    siblings.reserve(family.member_ids.size() - 1);
    for (int sid : family.member_ids) {
      if (sid != s_cur) siblings.push_back(sid);
    }
    const int s_next = select_bottleneck(siblings, state_, model_, policy_.potential);
    if (s_next < 0) continue;

    const int g_foresee = std::max(
        1, static_cast<int>(static_cast<double>(state_.g) * options_.foresee_p));
    const double prev_best_next =
        state_.per_subgraph[static_cast<std::size_t>(s_next)].best_latency_ms;
    const auto foresee_records = tune_step(s_next, cm, g_foresee);
    if (!foresee_records.empty()) {
      auto& st = state_.per_subgraph[static_cast<std::size_t>(s_next)];
      st.prev_best_latency_ms = prev_best_next;
      st.last_step_measurements = static_cast<std::int64_t>(foresee_records.size());
      state_.b += static_cast<std::int64_t>(foresee_records.size());
      st.best_history.emplace_back(state_.b, st.best_latency_ms);
      train_and_charge(foresee_records, cm);
      record_point("foresee", s_next);
    }
  }
  return state_;
}

TunerState foresee_tune(SimBackend& backend, std::int64_t budget, double p, Policy policy,
                        TuneOptions options) {
  options.budget = budget;
  options.foresee_p = p;
  TuningEngine engine(backend, policy, options);
  return engine.run();
}

TunerState baseline_tune(SimBackend& backend, std::int64_t budget, Policy policy,
                         TuneOptions options) {
  options.budget = budget;
  TuningEngine engine(backend, policy, options);
  return engine.run();
}

}  // namespace famtune
