#include "famtune/searchspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace famtune {

void validate_space(const SpaceDescriptor& space, const std::string& context) {
  const std::string where = context.empty() ? "knob space" : context;
  const auto n = space.knobs.size();
  if (n < 1 || n > static_cast<std::size_t>(kMaxKnobs)) {
    throw std::invalid_argument(where + ": knob count must be in [1, " +
                                std::to_string(kMaxKnobs) + "], got " + std::to_string(n));
  }
  for (const auto& knob : space.knobs) {
    if (knob.values.empty()) {
      throw std::invalid_argument(where + ": knob '" + knob.name + "' has no values");
    }
    std::unordered_set<std::int64_t> seen;
    for (auto v : knob.values) {
      if (v < 1) {
        throw std::invalid_argument(where + ": knob '" + knob.name +
                                    "' has non-positive value " + std::to_string(v));
      }
      if (!seen.insert(v).second) {
        throw std::invalid_argument(where + ": knob '" + knob.name +
                                    "' has duplicate value " + std::to_string(v));
      }
    }
  }
  space_size(space);  // overflow check
}

std::uint64_t space_size(const SpaceDescriptor& space) {
  unsigned __int128 total = 1;
  for (const auto& knob : space.knobs) {
    total *= knob.values.size();
    if (total > std::numeric_limits<std::uint64_t>::max() / 2) {
      throw std::overflow_error("knob space size exceeds 64-bit range");
    }
  }
  return static_cast<std::uint64_t>(total);
}

std::uint64_t linear_index(const SpaceDescriptor& space, std::span<const std::int32_t> assignment) {
  std::uint64_t idx = 0;
  for (std::size_t k = 0; k < space.knobs.size(); ++k) {
    idx = idx * space.knobs[k].values.size() + static_cast<std::uint64_t>(assignment[k]);
  }
  return idx;
}

Candidate candidate_from_index(const SpaceDescriptor& space, int subgraph_id, std::uint64_t index) {
  Candidate c;
  c.subgraph_id = subgraph_id;
  c.assignment.resize(space.knobs.size());
  for (std::size_t k = space.knobs.size(); k-- > 0;) {
    const auto m = space.knobs[k].values.size();
    c.assignment[k] = static_cast<std::int32_t>(index % m);
    index /= m;
  }
  return c;
}

Candidate default_candidate(const SpaceDescriptor& space, int subgraph_id) {
  Candidate c;
  c.subgraph_id = subgraph_id;
  c.assignment.assign(space.knobs.size(), 0);
  return c;
}

bool valid_candidate(const SpaceDescriptor& space, const Candidate& c) {
  if (c.assignment.size() != space.knobs.size()) return false;
  for (std::size_t k = 0; k < space.knobs.size(); ++k) {
    if (c.assignment[k] < 0 ||
        static_cast<std::size_t>(c.assignment[k]) >= space.knobs[k].values.size()) {
      return false;
    }
  }
  return true;
}

int feature_dim(int knob_count) {
  return 2 * knob_count + knob_count * (knob_count - 1) / 2;
}

std::vector<double> featurize(const SpaceDescriptor& space,
                              std::span<const std::int32_t> assignment,
                              int pad_dim) {
  const int k = static_cast<int>(space.knobs.size());
  if (assignment.size() != static_cast<std::size_t>(k)) {
    throw std::invalid_argument("featurize: assignment length does not match knob count");
  }
  const int d = feature_dim(k);
  if (pad_dim < d) {
    throw std::invalid_argument("featurize: pad_dim " + std::to_string(pad_dim) +
                                " smaller than feature dim " + std::to_string(d));
  }
  std::vector<double> out(static_cast<std::size_t>(pad_dim), 0.0);
  std::vector<double> logs(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& values = space.knobs[i].values;
    logs[i] = std::log2(static_cast<double>(values[assignment[i]]));
    out[i] = logs[i];
    const auto m = values.size();
    out[k + i] = m > 1 ? static_cast<double>(assignment[i]) / static_cast<double>(m - 1) : 0.0;
  }
  int pos = 2 * k;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      out[pos++] = logs[i] * logs[j];
    }
  }
  return out;
}

std::vector<Candidate> generate_candidates(const SpaceDescriptor& space,
                                           int subgraph_id,
                                           const MeasuredSet& measured,
                                           int pool_random,
                                           int pool_evolved,
                                           Rng& rng) {
  const std::uint64_t size = space_size(space);
  const std::uint64_t remaining = size - measured.size();
  if (remaining == 0) return {};

  if (measured.size() == 0) {
    pool_random += pool_evolved;
    pool_evolved = 0;
  }
  const std::uint64_t requested =
      static_cast<std::uint64_t>(pool_random) + static_cast<std::uint64_t>(pool_evolved);

  std::vector<Candidate> out;

  // Exhaustion path: everything still unmeasured fits in the request, so the
  // space is small by construction - enumerate it.
  if (remaining <= requested) {
    out.reserve(remaining);
    for (std::uint64_t idx = 0; idx < size; ++idx) {
      if (!measured.contains(idx)) out.push_back(candidate_from_index(space, subgraph_id, idx));
    }
    return out;
  }

  std::unordered_set<std::uint64_t> chosen;
  auto take = [&](std::uint64_t idx) {
    if (measured.contains(idx) || !chosen.insert(idx).second) return false;
    out.push_back(candidate_from_index(space, subgraph_id, idx));
    return true;
  };

  std::uint64_t attempts = 64 * static_cast<std::uint64_t>(pool_random) + 1024;
  for (int got = 0; got < pool_random && attempts > 0; --attempts) {
    if (take(uniform_below(rng, size))) ++got;
  }

  if (pool_evolved > 0) {
    // Parents: best quartile of the measured history by latency.
    auto parents = measured.items();
    std::sort(parents.begin(), parents.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    const std::size_t n_parents = std::max<std::size_t>(1, parents.size() / 4);

    attempts = 64 * static_cast<std::uint64_t>(pool_evolved) + 1024;
    for (int got = 0; got < pool_evolved && attempts > 0; --attempts) {
      const auto& parent = parents[uniform_below(rng, n_parents)];
      Candidate mutant = candidate_from_index(space, subgraph_id, parent.first);
      const std::size_t knob = uniform_below(rng, space.knobs.size());
      mutant.assignment[knob] =
          static_cast<std::int32_t>(uniform_below(rng, space.knobs[knob].values.size()));
      if (take(linear_index(space, mutant.assignment))) ++got;
    }
  }
  return out;
}

}  // namespace famtune
