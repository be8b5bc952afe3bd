#include "famtune/searchspace.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "test_util.hpp"

namespace famtune {
namespace {

using testutil::make_space;

TEST(SpaceSize, ProductOfValueCounts) {
  EXPECT_EQ(space_size(make_space({{1, 2, 4, 8}, {1, 2, 4, 8, 16}, {1, 2, 4, 8, 16, 32, 64, 128,
                                                                    256, 512, 1024, 2048, 4096,
                                                                    8192, 16384, 32768}})),
            4u * 5u * 16u);
  EXPECT_EQ(space_size(make_space({{7}})), 1u);
  EXPECT_EQ(space_size(make_space({{1, 2, 4, 8, 16, 32, 64, 128},
                                   {1, 2, 4, 8, 16, 32, 64, 128},
                                   {1, 2, 4, 8, 16, 32, 64, 128},
                                   {1, 2, 4, 8, 16, 32, 64, 128}})),
            4096u);
}

TEST(SpaceSize, OverflowDetected) {
  // 16 knobs x 4096 values each = 2^192 candidates.
  std::vector<std::vector<std::int64_t>> big;
  for (int k = 0; k < 16; ++k) {
    std::vector<std::int64_t> values;
    for (std::int64_t v = 1; v <= 4096; ++v) values.push_back(v);
    big.push_back(std::move(values));
  }
  EXPECT_THROW(space_size(make_space(big)), std::overflow_error);
}

TEST(ValidateSpace, RejectsBadDescriptors) {
  EXPECT_THROW(validate_space(SpaceDescriptor{}), std::invalid_argument);
  EXPECT_THROW(validate_space(make_space({{}})), std::invalid_argument);
  EXPECT_THROW(validate_space(make_space({{0, 1}})), std::invalid_argument);
  EXPECT_THROW(validate_space(make_space({{2, 2}})), std::invalid_argument);
  std::vector<std::vector<std::int64_t>> too_many(17, {1, 2});
  EXPECT_THROW(validate_space(make_space(too_many)), std::invalid_argument);
  EXPECT_NO_THROW(validate_space(make_space({{1, 2, 4}})));
}

TEST(LinearIndex, RoundTripsEveryCandidate) {
  const auto space = make_space({{1, 2, 4}, {1, 2}, {1, 2, 4, 8, 16}});
  const auto size = space_size(space);
  for (std::uint64_t idx = 0; idx < size; ++idx) {
    const auto c = candidate_from_index(space, 0, idx);
    EXPECT_TRUE(valid_candidate(space, c));
    EXPECT_EQ(linear_index(space, c.assignment), idx);
  }
}

TEST(Featurize, SingleKnobLayout) {
  const auto space = make_space({{8, 16, 32}});
  const auto f = featurize(space, std::vector<std::int32_t>{0}, 6);
  ASSERT_EQ(f.size(), 6u);
  EXPECT_DOUBLE_EQ(f[0], 3.0);  // log2(8)
  EXPECT_DOUBLE_EQ(f[1], 0.0);  // first position
  for (std::size_t i = 2; i < 6; ++i) EXPECT_DOUBLE_EQ(f[i], 0.0);
}

TEST(Featurize, PairwiseTerm) {
  const auto space = make_space({{4, 8}, {2, 16}});
  // values (4, 2): logs are 2 and 1, pairwise product 2.
  const auto f = featurize(space, std::vector<std::int32_t>{0, 0}, feature_dim(2));
  ASSERT_EQ(f.size(), 5u);
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
  EXPECT_DOUBLE_EQ(f[4], 2.0);
}

TEST(Featurize, PureFunction) {
  const auto space = make_space({{1, 2, 4}, {1, 2, 4, 8}});
  const std::vector<std::int32_t> a = {2, 1};
  EXPECT_EQ(featurize(space, a, 8), featurize(space, a, 8));
}

TEST(Featurize, DimensionMismatchRejected) {
  const auto space = make_space({{1, 2}, {1, 2}});
  EXPECT_THROW(featurize(space, std::vector<std::int32_t>{0}, 8), std::invalid_argument);
  EXPECT_THROW(featurize(space, std::vector<std::int32_t>{0, 0}, feature_dim(2) - 1),
               std::invalid_argument);
}

TEST(Featurize, InjectiveOnSmallSpace) {
  const auto space = make_space({{1, 2, 4, 8}, {1, 3, 9}, {2, 4}});
  const auto size = space_size(space);
  std::set<std::vector<double>> seen;
  for (std::uint64_t idx = 0; idx < size; ++idx) {
    const auto c = candidate_from_index(space, 0, idx);
    EXPECT_TRUE(seen.insert(featurize(space, c.assignment, feature_dim(3))).second);
  }
  EXPECT_EQ(seen.size(), size);
}

TEST(GenerateCandidates, EmptyHistoryAllRandomDistinct) {
  // ~10^6 candidate space.
  const auto space = make_space({{1, 2, 4, 8, 16, 32, 64, 128, 256, 512},
                                 {1, 2, 4, 8, 16, 32, 64, 128, 256, 512},
                                 {1, 2, 4, 8, 16, 32, 64, 128, 256, 512},
                                 {1, 2, 4, 8, 16, 32, 64, 128, 256, 512},
                                 {1, 2, 4, 8, 16, 32, 64, 128, 256, 512},
                                 {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}});
  MeasuredSet history;
  auto rng = make_rng(5);
  const auto pool = generate_candidates(space, 0, history, 512, 512, rng);
  EXPECT_EQ(pool.size(), 1024u);
  std::set<std::uint64_t> keys;
  for (const auto& c : pool) {
    EXPECT_TRUE(valid_candidate(space, c));
    keys.insert(linear_index(space, c.assignment));
  }
  EXPECT_EQ(keys.size(), pool.size());
}

TEST(GenerateCandidates, ExhaustedSpaceReturnsEmpty) {
  const auto space = make_space({{1, 2, 4, 8, 16}, {1, 2, 4, 8, 16, 32, 64, 128},
                                 {1, 2, 4, 8, 16, 32, 64, 128}});
  ASSERT_EQ(space_size(space), 320u);
  MeasuredSet history;
  for (std::uint64_t idx = 0; idx < 320; ++idx) history.add(idx, 1.0);
  auto rng = make_rng(5);
  EXPECT_TRUE(generate_candidates(space, 0, history, 512, 512, rng).empty());
}

TEST(GenerateCandidates, ReturnsExactRemainderNearExhaustion) {
  const auto space = make_space({{1, 2, 4, 8}, {1, 2, 4, 8}});
  MeasuredSet history;
  for (std::uint64_t idx = 0; idx < 13; ++idx) history.add(idx, 1.0);
  auto rng = make_rng(5);
  const auto pool = generate_candidates(space, 0, history, 8, 8, rng);
  ASSERT_EQ(pool.size(), 3u);
  for (const auto& c : pool) {
    EXPECT_GE(linear_index(space, c.assignment), 13u);
  }
}

TEST(GenerateCandidates, NeverReturnsMeasured) {
  const auto space = make_space({{1, 2, 4, 8}, {1, 2, 4, 8}, {1, 2, 4, 8}});
  Rng rng = make_rng(17);
  MeasuredSet history;
  for (int round = 0; round < 10; ++round) {
    const auto pool = generate_candidates(space, 0, history, 16, 16, rng);
    for (const auto& c : pool) {
      const auto key = linear_index(space, c.assignment);
      EXPECT_FALSE(history.contains(key));
      EXPECT_TRUE(valid_candidate(space, c));  // mutation preserves validity
      history.add(key, uniform01(rng) + 0.5);
    }
  }
}

TEST(MeasuredSet, DeduplicatesKeys) {
  MeasuredSet set;
  set.add(5, 1.0);
  set.add(5, 2.0);  // repeat measurement of the same candidate is ignored
  set.add(7, 3.0);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_TRUE(set.contains(5));
  EXPECT_FALSE(set.contains(6));
  EXPECT_DOUBLE_EQ(set.items()[0].second, 1.0);
}

TEST(GenerateCandidates, DeterministicForFixedSeed) {
  const auto space = make_space({{1, 2, 4, 8, 16}, {1, 2, 4, 8, 16}, {1, 2, 4}});
  MeasuredSet history;
  history.add(0, 2.0);
  history.add(5, 1.0);
  history.add(9, 3.0);
  auto run = [&] {
    auto rng = make_rng(123);
    return generate_candidates(space, 0, history, 32, 32, rng);
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

}  // namespace
}  // namespace famtune
