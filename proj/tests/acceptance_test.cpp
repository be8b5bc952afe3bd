// Acceptance suite: every test below checks one end-to-end property of the
// tuning engine against the simulated backend, at the tolerances stated in
// its name's short description. Run via ctest or directly; one PASS/FAIL
// line is printed per criterion.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "famtune/config.hpp"
#include "famtune/experiment.hpp"
#include "famtune/graph.hpp"
#include "famtune/scheduler.hpp"
#include "famtune/simbackend.hpp"
#include "test_util.hpp"

namespace famtune {
namespace {

using testutil::make_model;
using testutil::make_space;
using testutil::make_subgraph;
using testutil::median;

// Eleven subgraphs, three core-op groups (5 conv2d / 4 batch_matmul /
// 2 softmax) with four-knob spaces of 65536 candidates - large enough that
// no subgraph exhausts inside any budget used here.
ModelGraph tuning_fixture_model() {
  std::vector<Subgraph> subgraphs;
  const auto space = [] {
    std::vector<std::int64_t> v;
    for (std::int64_t x = 1; x <= 32768; x *= 2) v.push_back(x);  // 16 values
    return make_space({v, v, v, v});
  };
  const std::vector<std::int64_t> weights = {3, 2, 2, 1, 1, 3, 2, 1, 1, 2, 1};
  for (int i = 0; i < 5; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::Conv2d, OpKind::Relu}, OpKind::Conv2d,
                                      weights[static_cast<std::size_t>(i)], space(), 10 + i));
  }
  for (int i = 5; i < 9; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::BatchMatmul, OpKind::Add}, OpKind::BatchMatmul,
                                      weights[static_cast<std::size_t>(i)], space(), 10 + i));
  }
  for (int i = 9; i < 11; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::Softmax}, OpKind::Softmax,
                                      weights[static_cast<std::size_t>(i)], space(), 10 + i));
  }
  return make_model("tuning_fixture", std::move(subgraphs));
}

TuneOptions light_options(std::int64_t budget, std::uint64_t seed) {
  TuneOptions options;
  options.budget = budget;
  options.seed = seed;
  options.pool_random = 64;
  options.pool_evolved = 64;
  options.cost_model.trees = 4;
  options.cost_model.depth = 2;
  return options;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Criterion 1: for n=11, B=9900, p=0.25 the iteration size is g=64, every
// full iteration with a multi-member family consumes exactly 64+16, and the
// final used budget lands in [B, B+g+floor(g*p)).
TEST(Acceptance, C1_BudgetArithmetic) {
  // Two wide knobs per subgraph (16384 candidates) keep every space far from
  // exhaustion while the feature width stays small; this criterion checks
  // budget arithmetic, not model quality.
  std::vector<Subgraph> subgraphs;
  const auto wide_space = [] {
    std::vector<std::int64_t> v(128);
    for (int i = 0; i < 128; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    return make_space({v, v});
  };
  for (int i = 0; i < 5; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::Conv2d}, OpKind::Conv2d, 1 + i % 3,
                                      wide_space(), 10 + i));
  }
  for (int i = 5; i < 9; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::BatchMatmul}, OpKind::BatchMatmul, 1 + i % 2,
                                      wide_space(), 10 + i));
  }
  for (int i = 9; i < 11; ++i) {
    subgraphs.push_back(make_subgraph(i, {OpKind::Softmax}, OpKind::Softmax, 1,
                                      wide_space(), 10 + i));
  }
  const auto model = make_model("budget_fixture", std::move(subgraphs));
  const auto truth = cluster_by_core_op(model.subgraphs);
  LandscapeParams params;
  params.noise_sigma = 0.02;
  SimBackend backend(model, make_landscape(model, truth, 1, params), 1, SimClock{}, 1);

  TuneOptions options = light_options(9900, 1);
  options.pool_random = 64;
  options.pool_evolved = 0;  // budget arithmetic does not need model quality
  options.cost_model.trees = 1;
  options.cost_model.depth = 1;
  const auto state = foresee_tune(backend, 9900, 0.25, make_foresee_policy(), options);
  EXPECT_EQ(state.g, 64);

  std::int64_t prev_b = 0;
  for (std::size_t i = 1; i < state.curve.size(); ++i) {
    const auto delta = state.curve[i].b - prev_b;
    prev_b = state.curve[i].b;
    if (state.curve[i].phase == "main") {
      EXPECT_EQ(delta, 64) << "curve index " << i;
    } else {
      ASSERT_EQ(state.curve[i].phase, "foresee");
      EXPECT_EQ(delta, 16) << "curve index " << i;
    }
  }
  // Every family here has >1 member, so iterations alternate main/foresee.
  for (std::size_t i = 1; i < state.curve.size(); ++i) {
    EXPECT_EQ(state.curve[i].phase, i % 2 == 1 ? "main" : "foresee");
  }
  EXPECT_GE(state.b, 9900);
  EXPECT_LT(state.b, 9900 + 64 + 16);
  std::printf("[criterion 1] g=%d final b=%lld in [9900, 9980)\n", state.g,
              static_cast<long long>(state.b));
}

// Criterion 2: with one structurally distinct archetype, its subgraphs'
// family-model accuracy beats the monolithic model by >= 0.05 (median over
// 5 seeds); a data-starved subgraph in a populous archetype shows the
// reverse gap (monolithic wins over its individual model).
TEST(Acceptance, C2_FamilyStructureBenefit) {
  const auto model = testutil::family_fixture_model();
  const auto truth = cluster_by_core_op(model.subgraphs);
  const int starved = 2;        // conv2d family, five members
  const int distinct_a = 9, distinct_b = 10;  // the softmax archetype

  std::vector<double> distinct_gaps, starved_gaps;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto landscape = testutil::family_fixture_landscape(model, truth, 0.10, seed);
    // Keep base latencies close and per-subgraph shifts small, so family
    // members really are interchangeable training data; what separates the
    // archetypes is their shape alone.
    for (std::size_t sid = 0; sid < landscape.subgraphs.size(); ++sid) {
      auto& sl = landscape.subgraphs[sid];
      sl.base_latency_ms = 1.0 + 0.08 * static_cast<double>(sid);
      for (auto& d : sl.shift) d *= 0.3;
    }
    std::vector<int> samples(model.subgraphs.size(), 256);
    samples[static_cast<std::size_t>(starved)] = 32;
    const auto bars =
        run_accuracy_bars(model, landscape, samples, seed, GbtParams{}, &truth);

    const auto& ra = bars.rows[static_cast<std::size_t>(distinct_a)];
    const auto& rb = bars.rows[static_cast<std::size_t>(distinct_b)];
    distinct_gaps.push_back(((ra.family - ra.monolithic) + (rb.family - rb.monolithic)) / 2.0);
    const auto& rs = bars.rows[static_cast<std::size_t>(starved)];
    starved_gaps.push_back(rs.monolithic - rs.individual);
  }
  const double distinct_med = median(distinct_gaps);
  const double starved_med = median(starved_gaps);
  std::printf("[criterion 2] distinct-archetype gap median %.4f (>= 0.05), "
              "starved reverse gap median %.4f (> 0)\n",
              distinct_med, starved_med);
  EXPECT_GE(distinct_med, 0.05);
  EXPECT_GT(starved_med, 0.0);
}

// Criterion 3: mean within-archetype heatmap accuracy exceeds mean
// cross-archetype accuracy by >= 0.10, median over 5 seeds.
TEST(Acceptance, C3_HeatmapDiagonalDominance) {
  const auto model = testutil::family_fixture_model();
  const auto truth = cluster_by_core_op(model.subgraphs);

  std::vector<double> gaps;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto landscape = testutil::family_fixture_landscape(model, truth, 0.02, seed);
    const auto heatmap = run_heatmap(model, landscape, 256, seed);
    double within = 0.0, cross = 0.0;
    int n_within = 0, n_cross = 0;
    for (int row = 0; row < heatmap.n; ++row) {
      for (int col = 0; col < heatmap.n; ++col) {
        if (truth.family_of(row) == truth.family_of(col)) {
          within += heatmap.cell(row, col);
          ++n_within;
        } else {
          cross += heatmap.cell(row, col);
          ++n_cross;
        }
      }
    }
    gaps.push_back(within / n_within - cross / n_cross);
  }
  const double gap_med = median(gaps);
  std::printf("[criterion 3] within-vs-cross accuracy gap median %.4f (>= 0.10)\n", gap_med);
  EXPECT_GE(gap_med, 0.10);
}

// Criterion 4: on a family-structured fixture (3 archetypes, 11 subgraphs),
// the foresee policy reaches the baseline's final latency with <= 0.8x of
// the baseline's budget, and is no worse than 1.1x at the 80% threshold
// (medians over 5 seeds).
TEST(Acceptance, C4_SearchEfficiencySpeedup) {
  const auto model = tuning_fixture_model();
  const auto truth = cluster_by_core_op(model.subgraphs);

  std::vector<double> ratio_100, ratio_80;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto landscape = testutil::family_fixture_landscape(model, truth, 0.02, seed);
    CompareConfig config;
    config.budget = 9900;
    config.foresee_p = 0.25;
    config.seed = seed;
    const auto report = run_compare(model, landscape, config);

    const auto& t100 = report.thresholds[2];
    const auto& t80 = report.thresholds[0];
    ASSERT_GE(t100.baseline_b, 0);
    ASSERT_GE(t100.foresee_b, 0) << "foresee never reached the baseline final latency";
    ratio_100.push_back(static_cast<double>(t100.foresee_b) /
                        static_cast<double>(t100.baseline_b));
    ASSERT_GE(t80.foresee_b, 0);
    ratio_80.push_back(static_cast<double>(t80.foresee_b) /
                       static_cast<double>(t80.baseline_b));
  }
  const double med_100 = median(ratio_100);
  const double med_80 = median(ratio_80);
  std::printf("[criterion 4] budget ratio foresee/baseline: median %.3f at 100%% (<= 0.8), "
              "median %.3f at 80%% (<= 1.1)\n",
              med_100, med_80);
  EXPECT_LE(med_100, 0.8);
  EXPECT_LE(med_80, 1.1);
}

// Criterion 5: with zero noise and budget >= twice the total space size on
// tiny spaces, both policies land exactly on the brute-force model latency.
TEST(Acceptance, C5_OracleConvergence) {
  const auto model = make_model(
      "tiny_spaces",
      {make_subgraph(0, {OpKind::Conv2d}, OpKind::Conv2d, 2,
                     make_space({{1, 2, 4, 8, 16}, {1, 2, 4, 8, 16, 32, 64, 128},
                                 {1, 2, 4, 8, 16, 32, 64, 128}}),
                     1),
       make_subgraph(1, {OpKind::Conv2d}, OpKind::Conv2d, 1,
                     make_space({{1, 2, 4, 8, 16}, {1, 2, 4, 8, 16, 32, 64, 128},
                                 {1, 2, 4, 8, 16, 32, 64, 128}}),
                     2),
       make_subgraph(2, {OpKind::Softmax}, OpKind::Softmax, 1,
                     make_space({{1, 2, 4, 8}, {1, 2, 4, 8, 16, 32, 64, 128},
                                 {1, 2, 4, 8, 16, 32, 64, 128}}),
                     3)});
  std::uint64_t total_space = 0;
  for (const auto& sg : model.subgraphs) total_space += space_size(sg.knob_space);
  ASSERT_EQ(total_space, 320u + 320u + 256u);
  const std::int64_t budget = static_cast<std::int64_t>(2 * total_space);

  const auto truth = cluster_by_core_op(model.subgraphs);
  LandscapeParams params;
  params.noise_sigma = 0.0;
  const auto landscape = make_landscape(model, truth, 5, params);

  double oracle_sum = 0.0;
  for (const auto& sg : model.subgraphs) {
    oracle_sum += static_cast<double>(sg.weight) * brute_force_optimum(sg, landscape).second;
  }

  for (const bool foresee : {true, false}) {
    SimBackend backend(model, landscape, 5, SimClock{}, 1);
    TuneOptions options = light_options(budget, 5);
    options.pool_random = 512;
    options.pool_evolved = 512;
    const auto policy = foresee ? make_foresee_policy() : make_baseline_policy();
    TuningEngine engine(backend, policy, options);
    const auto state = engine.run();
    EXPECT_DOUBLE_EQ(state.curve.back().model_latency_ms, oracle_sum)
        << (foresee ? "foresee" : "baseline");
    for (const auto& st : state.per_subgraph) EXPECT_TRUE(st.exhausted);
  }
  std::printf("[criterion 5] both policies reached oracle latency %.9f ms exactly\n", oracle_sum);
}

// Criterion 6: simulated elapsed time is exactly ceil(m/W) * t_measure over
// the whole (m, W) grid up to 128x8, and curves in budget space are
// identical across worker counts.
TEST(Acceptance, C6_ExecutorWallTimeLaw) {
  const auto model = testutil::family_fixture_model();
  const auto truth = cluster_by_core_op(model.subgraphs);
  const auto landscape = make_landscape(model, truth, 9);

  for (int m = 1; m <= 128; ++m) {
    for (int w = 1; w <= 8; ++w) {
      SimBackend backend(model, landscape, 9, SimClock{}, w);
      std::vector<Candidate> batch(
          static_cast<std::size_t>(m),
          default_candidate(model.subgraphs[0].knob_space, 0));
      backend.run_batch(batch);
      const double expected = static_cast<double>((m + w - 1) / w) * backend.clock().t_measure;
      ASSERT_DOUBLE_EQ(backend.clock().now, expected) << "m=" << m << " W=" << w;
    }
  }

  auto run_with_workers = [&](int workers) {
    SimBackend backend(model, landscape, 9, SimClock{}, workers);
    return foresee_tune(backend, 400, 0.25, make_foresee_policy(), light_options(400, 9));
  };
  const auto one = run_with_workers(1);
  const auto three = run_with_workers(3);
  ASSERT_EQ(one.curve.size(), three.curve.size());
  for (std::size_t i = 0; i < one.curve.size(); ++i) {
    ASSERT_EQ(one.curve[i].b, three.curve[i].b);
    ASSERT_DOUBLE_EQ(one.curve[i].model_latency_ms, three.curve[i].model_latency_ms);
  }
  std::printf("[criterion 6] elapsed == ceil(m/W)*t_measure on the full grid; "
              "curves identical across W\n");
}

// Criterion 7: boosting MSE is non-increasing on 10 random datasets, the fit
// is permutation-invariant, and two-point ranking is always correct.
TEST(Acceptance, C7_CostModelProperties) {
  Rng rng = make_rng(77);
  for (int dataset = 0; dataset < 10; ++dataset) {
    auto model = initialize_cost_model(0);
    const int n = 16 + static_cast<int>(uniform_below(rng, 300));
    for (int i = 0; i < n; ++i) {
      std::vector<double> x = {uniform01(rng) * 4.0, uniform01(rng) * 4.0,
                               uniform01(rng) * 4.0, uniform01(rng)};
      const double target = 2.0 * x[0] - x[1] * x[2] + std::sin(x[3]) + normal(rng, 0.0, 0.25);
      model.training_set.push_back({std::move(x), target});
    }
    fit(model);
    for (std::size_t r = 1; r < model.train_mse_by_round.size(); ++r) {
      ASSERT_LE(model.train_mse_by_round[r], model.train_mse_by_round[r - 1] + 1e-12);
    }
  }

  // Permutation invariance, bit for bit.
  auto base = initialize_cost_model(0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x = {uniform01(rng), uniform01(rng), uniform01(rng)};
    const double target = x[0] - 2.0 * x[1] + 0.5 * x[2] + normal(rng, 0.0, 0.1);
    base.training_set.push_back({std::move(x), target});
  }
  auto shuffled = base;
  shuffle(shuffled.training_set, rng);
  fit(base);
  fit(shuffled);
  for (int probe = 0; probe < 50; ++probe) {
    const std::vector<double> x = {uniform01(rng), uniform01(rng), uniform01(rng)};
    ASSERT_EQ(predict(base, x), predict(shuffled, x));
  }

  // Two-point ranking.
  for (int trial = 0; trial < 50; ++trial) {
    MeasurementRecord a, b;
    a.features = {uniform01(rng) * 8.0, uniform01(rng) * 8.0};
    b.features = {a.features[0] + 0.5 + uniform01(rng), a.features[1]};
    a.latency_ms = 0.5 + uniform01(rng);
    b.latency_ms = a.latency_ms * (1.5 + uniform01(rng));
    auto model = initialize_cost_model(0);
    train_cost_model(std::vector<MeasurementRecord>{a, b}, model);
    ASSERT_LT(predict(model, a.features), predict(model, b.features)) << "trial " << trial;
  }
  std::printf("[criterion 7] MSE monotone on 10 datasets; fit permutation-invariant; "
              "two-point ranking correct on 50 trials\n");
}

// Criterion 8: rerunning from a manifest reproduces the curve CSV bit for
// bit, end to end through the CLI binary.
TEST(Acceptance, C8_ManifestDeterminism) {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / "famtune_acceptance_c8";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const auto run1 = (tmp / "run1").string();
  const auto run2 = (tmp / "run2").string();
  const std::string modelfile = std::string(FAMTUNE_MODELS_DIR) + "/tiny.json";

  const std::string first = std::string(FAMTUNE_BIN) + " tune --model " + modelfile +
                            " --budget 200 --seed 5 --cm-trees 8 --cm-depth 2" +
                            " --pool-random 64 --pool-evolved 64 --out-dir " + run1 +
                            " > /dev/null";
  ASSERT_EQ(std::system(first.c_str()), 0) << first;

  const std::string second = std::string(FAMTUNE_BIN) + " tune --config " + run1 +
                             "/manifest.json --out-dir " + run2 + " > /dev/null";
  ASSERT_EQ(std::system(second.c_str()), 0) << second;

  const auto curve1 = read_file(fs::path(run1) / "curve.csv");
  const auto curve2 = read_file(fs::path(run2) / "curve.csv");
  ASSERT_FALSE(curve1.empty());
  EXPECT_EQ(curve1, curve2);

  // Same seed and config imply the same landscape digest in both manifests.
  const auto m1 = read_file(fs::path(run1) / "manifest.json");
  const auto m2 = read_file(fs::path(run2) / "manifest.json");
  const auto digest_of = [](const std::string& text) {
    const auto pos = text.find("landscape_digest");
    return text.substr(pos, text.find('\n', pos) - pos);
  };
  EXPECT_EQ(digest_of(m1), digest_of(m2));
  fs::remove_all(tmp);
  std::printf("[criterion 8] manifest rerun reproduced curve.csv byte-identically\n");
}

// Criterion 9: a 320-candidate subgraph is fully enumerated, then excluded
// from selection, and the loop carries on without stalling.
TEST(Acceptance, C9_ExhaustionHandling) {
  const auto small_space = make_space({{1, 2, 4, 8, 16}, {1, 2, 4, 8, 16, 32, 64, 128},
                                       {1, 2, 4, 8, 16, 32, 64, 128}});
  const auto big_space = make_space({{1, 2, 4, 8, 16, 32, 64, 128},
                                     {1, 2, 4, 8, 16, 32, 64, 128},
                                     {1, 2, 4, 8, 16, 32, 64, 128},
                                     {1, 2, 4, 8, 16, 32, 64, 128}});
  const auto model = make_model(
      "exhaust", {make_subgraph(0, {OpKind::Conv2d}, OpKind::Conv2d, 50, small_space, 1),
                  make_subgraph(1, {OpKind::Softmax}, OpKind::Softmax, 1, big_space, 2)});
  ASSERT_EQ(space_size(model.subgraphs[0].knob_space), 320u);

  const auto truth = cluster_by_core_op(model.subgraphs);
  LandscapeParams params;
  params.noise_sigma = 0.02;
  SimBackend backend(model, make_landscape(model, truth, 3, params), 3, SimClock{}, 1);

  TuneOptions options = light_options(960, 3);
  options.pool_random = 512;
  options.pool_evolved = 512;
  const auto state = foresee_tune(backend, 960, 0.25, make_foresee_policy(), options);

  EXPECT_TRUE(state.per_subgraph[0].exhausted);
  EXPECT_EQ(state.per_subgraph[0].spent, 320);
  EXPECT_EQ(static_cast<std::uint64_t>(state.per_subgraph[0].measured.size()),
            space_size(model.subgraphs[0].knob_space));
  EXPECT_GE(state.b, 960);

  // Once subgraph 0 ran dry, every further curve point belongs to subgraph 1.
  std::int64_t spent0 = 0;
  std::int64_t prev_b = 0;
  for (const auto& point : state.curve) {
    const auto delta = point.b - prev_b;
    prev_b = point.b;
    if (point.tuned_subgraph == 0) {
      EXPECT_LT(spent0, 320) << "subgraph 0 selected after exhaustion";
      spent0 += delta;
    }
  }
  EXPECT_EQ(spent0, 320);
  std::printf("[criterion 9] 320-candidate subgraph enumerated (spent=%lld), excluded, "
              "run finished at b=%lld\n",
              static_cast<long long>(state.per_subgraph[0].spent),
              static_cast<long long>(state.b));
}

}  // namespace
}  // namespace famtune
