#include "famtune/simbackend.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace famtune {
namespace {

constexpr std::uint64_t kArchetypeStream = 0xA1;
constexpr std::uint64_t kSubgraphStream = 0xB2;
constexpr std::uint64_t kNoiseStream = 0xC3;

double normalized_position(const SpaceDescriptor& space, int knob, std::int32_t index) {
  const auto m = space.knobs[static_cast<std::size_t>(knob)].values.size();
  return m > 1 ? static_cast<double>(index) / static_cast<double>(m - 1) : 0.0;
}

}  // namespace

Landscape make_landscape(const ModelGraph& model, const FamilyRegistry& truth,
                         std::uint64_t seed, const LandscapeParams& params) {
  if (truth.subgraph_count() != static_cast<int>(model.subgraphs.size())) {
    throw std::invalid_argument("make_landscape: registry does not cover the model");
  }
  Landscape landscape;
  landscape.archetypes.resize(static_cast<std::size_t>(truth.family_count()));
  for (int fam = 0; fam < truth.family_count(); ++fam) {
    auto rng = make_rng(seed, kArchetypeStream, static_cast<std::uint64_t>(fam));
    auto& arch = landscape.archetypes[static_cast<std::size_t>(fam)];
    arch.optimum.resize(kMaxKnobs);
    for (auto& o : arch.optimum) o = uniform01(rng);
    arch.curvature = uniform_range(rng, params.curvature_min, params.curvature_max);
    arch.interaction.assign(kMaxKnobs * kMaxKnobs, 0.0);
    const double entry_scale = 2.0 * params.interaction_budget / (kMaxKnobs * kMaxKnobs);
    double total = 0.0;
    for (int i = 0; i < kMaxKnobs; ++i) {
      for (int j = i + 1; j < kMaxKnobs; ++j) {
        const double w = uniform_range(rng, -entry_scale, entry_scale);
        arch.interaction[static_cast<std::size_t>(i * kMaxKnobs + j)] = w;
        arch.interaction[static_cast<std::size_t>(j * kMaxKnobs + i)] = w;
        total += 2.0 * std::abs(w);
      }
    }
    // Keep |z^T W z| under the budget so latencies stay positive.
    if (total > params.interaction_budget) {
      const double scale = params.interaction_budget / total;
      for (auto& w : arch.interaction) w *= scale;
    }
  }

  landscape.subgraphs.resize(model.subgraphs.size());
  for (const auto& sg : model.subgraphs) {
    auto rng = make_rng(seed, kSubgraphStream, static_cast<std::uint64_t>(sg.id));
    auto& sl = landscape.subgraphs[static_cast<std::size_t>(sg.id)];
    sl.archetype_id = truth.family_of(sg.id);
    sl.base_latency_ms =
        log_uniform_range(rng, params.base_latency_min_ms, params.base_latency_max_ms);
    sl.shift.resize(sg.knob_space.knobs.size());
    for (auto& d : sl.shift) d = uniform_range(rng, -params.delta_max, params.delta_max);
    sl.noise_sigma = params.noise_sigma;
  }
  return landscape;
}

double true_latency(const Landscape& landscape, const Subgraph& sg,
                    std::span<const std::int32_t> assignment) {
  const auto& sl = landscape.subgraphs[static_cast<std::size_t>(sg.id)];
  const auto& arch = landscape.archetypes[static_cast<std::size_t>(sl.archetype_id)];
  const int k = static_cast<int>(sg.knob_space.knobs.size());

  std::array<double, kMaxKnobs> z{};
  for (int i = 0; i < k; ++i) {
    z[static_cast<std::size_t>(i)] = normalized_position(sg.knob_space, i, assignment[static_cast<std::size_t>(i)]);
  }
  double quad = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = z[static_cast<std::size_t>(i)] - arch.optimum[static_cast<std::size_t>(i)] -
                     sl.shift[static_cast<std::size_t>(i)];
    quad += arch.curvature * d * d;
  }
  double inter = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      inter += z[static_cast<std::size_t>(i)] *
               arch.interaction[static_cast<std::size_t>(i * kMaxKnobs + j)] *
               z[static_cast<std::size_t>(j)];
    }
  }
  return sl.base_latency_ms * (1.0 + quad + inter);
}

double measure(const Landscape& landscape, const Subgraph& sg, const Candidate& candidate,
               Rng& rng) {
  const double base = true_latency(landscape, sg, candidate.assignment);
  const double sigma = landscape.subgraphs[static_cast<std::size_t>(sg.id)].noise_sigma;
  if (sigma == 0.0) return base;
  return base * std::exp(normal(rng, 0.0, sigma));
}

std::pair<Candidate, double> brute_force_optimum(const Subgraph& sg, const Landscape& landscape) {
  const auto size = space_size(sg.knob_space);
  if (size > 1000000) {
    throw std::invalid_argument("brute_force_optimum: space of " + std::to_string(size) +
                                " candidates is too large to enumerate");
  }
  Candidate best;
  double best_latency = std::numeric_limits<double>::infinity();
  for (std::uint64_t idx = 0; idx < size; ++idx) {
    Candidate c = candidate_from_index(sg.knob_space, sg.id, idx);
    const double latency = true_latency(landscape, sg, c.assignment);
    if (latency < best_latency) {
      best_latency = latency;
      best = std::move(c);
    }
  }
  return {best, best_latency};
}

std::string landscape_to_csv(const Landscape& landscape) {
  std::ostringstream out;
  out << "subgraph_id,archetype_id,base_latency_ms,noise_sigma\n";
  out.precision(17);
  for (std::size_t sid = 0; sid < landscape.subgraphs.size(); ++sid) {
    const auto& sl = landscape.subgraphs[sid];
    out << sid << ',' << sl.archetype_id << ',' << sl.base_latency_ms << ',' << sl.noise_sigma
        << '\n';
  }
  return out.str();
}

std::uint64_t landscape_digest(const Landscape& landscape) {
  std::ostringstream out;
  out.precision(17);
  out << landscape_to_csv(landscape);
  for (const auto& sl : landscape.subgraphs) {
    for (double d : sl.shift) out << d << ';';
  }
  for (const auto& arch : landscape.archetypes) {
    out << arch.curvature << '!';
    for (double o : arch.optimum) out << o << ';';
    for (double w : arch.interaction) out << w << ';';
  }
  return fnv1a64(out.str());
}

SimBackend::SimBackend(const ModelGraph& model, Landscape landscape, std::uint64_t seed,
                       SimClock clock, int workers)
    : model_(model),
      landscape_(std::move(landscape)),
      clock_(clock),
      workers_(workers),
      pad_dim_(max_feature_dim(model)) {
  if (workers_ < 1) throw std::invalid_argument("SimBackend: workers must be >= 1");
  if (landscape_.subgraphs.size() != model.subgraphs.size()) {
    throw std::invalid_argument("SimBackend: landscape does not cover the model");
  }
  noise_streams_.reserve(model.subgraphs.size());
  for (std::size_t sid = 0; sid < model.subgraphs.size(); ++sid) {
    noise_streams_.push_back(make_rng(seed, kNoiseStream, sid));
  }
}

std::vector<MeasurementRecord> SimBackend::run_batch(std::span<const Candidate> candidates) {
  return run_batch(candidates, workers_);
}

std::vector<MeasurementRecord> SimBackend::run_batch(std::span<const Candidate> candidates,
                                                     int workers) {
  if (workers < 1) throw std::invalid_argument("run_batch: workers must be >= 1");
  std::vector<MeasurementRecord> records;
  records.reserve(candidates.size());
  const std::int64_t m = static_cast<std::int64_t>(candidates.size());
  for (std::int64_t i = 0; i < m; ++i) {
    const auto& candidate = candidates[static_cast<std::size_t>(i)];
    const auto& sg = model_.subgraphs[static_cast<std::size_t>(candidate.subgraph_id)];
    if (!valid_candidate(sg.knob_space, candidate)) {
      throw std::invalid_argument("run_batch: invalid candidate for subgraph " +
                                  std::to_string(candidate.subgraph_id));
    }
    MeasurementRecord rec;
    rec.candidate = candidate;
    rec.features = featurize(sg.knob_space, candidate.assignment, pad_dim_);
    rec.latency_ms =
        measure(landscape_, sg, candidate, noise_streams_[static_cast<std::size_t>(sg.id)]);
    // Slot i runs in wave floor(i / workers); one task per device at a time.
    rec.measured_at = clock_.now + static_cast<double>(i / workers + 1) * clock_.t_measure;
    records.push_back(std::move(rec));
  }
  const std::int64_t waves = m == 0 ? 0 : (m + workers - 1) / workers;
  clock_.now += static_cast<double>(waves) * clock_.t_measure;
  return records;
}

void SimBackend::charge_training(std::int64_t n_samples, bool accelerated) {
  const double divisor = accelerated ? clock_.train_speedup : 1.0;
  clock_.now += static_cast<double>(n_samples) * clock_.t_train_per_sample / divisor;
}

double SimBackend::default_latency(int subgraph_id) const {
  const auto& sg = model_.subgraphs[static_cast<std::size_t>(subgraph_id)];
  const auto c = default_candidate(sg.knob_space, subgraph_id);
  return true_latency(landscape_, sg, c.assignment);
}

std::pair<Candidate, double> SimBackend::optimum(int subgraph_id) const {
  return brute_force_optimum(model_.subgraphs[static_cast<std::size_t>(subgraph_id)], landscape_);
}

}  // namespace famtune
