#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "pvq/sampler.hpp"
#include "support/fixtures.hpp"

namespace pvq {
namespace {

using testing::uniform_matrix;

som::TrainSchedule quick() {
    som::TrainSchedule s;
    s.rough_epochs = 3;
    s.fine_epochs = 3;
    return s;
}

TEST(ChooseShardCount, Examples) {
    auto p = choose_shard_count(4'900'000, 80'000);
    EXPECT_EQ(p.shard_count, 52u);
    p = choose_shard_count(10'000, 5'000);
    EXPECT_EQ(p.shard_count, 100u);
    EXPECT_DOUBLE_EQ(p.estimated_size, 5000.0);
    p = choose_shard_count(100, 50);
    EXPECT_EQ(p.shard_count, 1u);
    EXPECT_DOUBLE_EQ(p.estimated_size, 50.0);
    EXPECT_EQ(choose_shard_count(20'000, 1'000).shard_count, 2u);
}

TEST(ChooseShardCount, ClampsBothEnds) {
    EXPECT_EQ(choose_shard_count(1000, 5).shard_count, 1u);
    EXPECT_EQ(choose_shard_count(10, 1000).shard_count, 10u);
    EXPECT_THROW(choose_shard_count(0, 10), std::invalid_argument);
    EXPECT_THROW(choose_shard_count(10, 0), std::invalid_argument);
}

TEST(ChooseShardCount, EstimateWithinOneRoundingStep) {
    auto gen = RandomSource(3).generator();
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 100 + gen.below(1'000'000);
        const std::size_t target = 5 + gen.below(static_cast<std::uint64_t>(5 * std::sqrt(double(n) * n)) / 2);
        const auto plan = choose_shard_count(n, target);
        if (plan.shard_count == 1 || plan.shard_count == n) continue;
        const double lo = estimated_size(n, plan.shard_count - 1);
        const double hi = estimated_size(n, plan.shard_count + 1);
        EXPECT_LE(lo, static_cast<double>(target));
        EXPECT_GE(hi, static_cast<double>(target));
    }
}

TEST(SampleShard, SingleRow) {
    const auto shard = DataMatrix(1, 3, {1, 2, 3}, {17});
    const auto s = sample_shard(shard, som::TrainSchedule{}, RandomSource(1));
    EXPECT_EQ(s.representative_rows, std::vector<RowId>{17});
    EXPECT_EQ(s.non_empty_cells, 1u);
    EXPECT_EQ(s.codebook_size_used, 5u);
}

TEST(SampleShard, FewSeparatedRowsAllReturned) {
    // 10 well separated points, m = 16 >= 10, radius-0 schedule.
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({100.0 * i, 37.0 * (i % 3)});
    const auto shard = DataMatrix::from_rows(rows);
    const auto s = sample_shard(shard, som::TrainSchedule::lloyd(50), RandomSource(5));
    std::set<RowId> got(s.representative_rows.begin(), s.representative_rows.end());
    EXPECT_EQ(got.size(), 10u);
}

TEST(SampleShard, RepresentativesAreDistinctShardRows) {
    const auto full = uniform_matrix(400, 3, 9);
    std::vector<std::size_t> odd;
    for (std::size_t i = 1; i < 400; i += 2) odd.push_back(i);
    const auto shard = full.select(odd);
    const auto s = sample_shard(shard, quick(), RandomSource(2));
    std::set<RowId> unique(s.representative_rows.begin(), s.representative_rows.end());
    EXPECT_EQ(unique.size(), s.representative_rows.size());
    for (RowId id : unique) EXPECT_EQ(id % 2, 1u);
    EXPECT_LE(s.non_empty_cells, som::codebook_size(200));
}

TEST(SampleShard, TwoClustersBothRepresented) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto gen = RandomSource(1000 + seed).generator();
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 1000; ++i) rows.push_back({gen.normal(), gen.normal(), gen.normal()});
        for (int i = 0; i < 10; ++i) rows.push_back({20 + gen.normal(), 20 + gen.normal(), 20 + gen.normal()});
        const auto data = DataMatrix::from_rows(rows);
        const auto s = sample_shard(data, som::TrainSchedule{}, RandomSource(seed));
        bool big = false, small = false;
        for (RowId r : s.representative_rows) (r < 1000 ? big : small) = true;
        EXPECT_TRUE(big && small) << "seed " << seed;
    }
}

TEST(Pvq, SizeBoundAndMembership) {
    const auto data = uniform_matrix(10'000, 3, 4);
    const auto r = pvq(data, 4, quick(), RandomSource(8));
    EXPECT_LE(r.rows.size(), 1000u);
    EXPECT_EQ(r.size_bound, 1000u);
    std::set<RowId> unique(r.rows.begin(), r.rows.end());
    EXPECT_EQ(unique.size(), r.rows.size());
    for (RowId id : r.rows) EXPECT_LT(id, 10'000u);
    std::size_t cells = 0;
    for (const auto& s : r.shards) {
        EXPECT_EQ(s.representative_rows.size(), s.non_empty_cells);
        EXPECT_LE(s.non_empty_cells, s.codebook_size_used);
        cells += s.non_empty_cells;
    }
    EXPECT_EQ(cells, r.rows.size());
}

TEST(Pvq, SingleShardEqualsSampleShard) {
    const auto data = uniform_matrix(500, 2, 6);
    const RandomSource rng(12);
    const auto r = pvq(data, 1, quick(), rng);
    const auto s = sample_shard(data, quick(), shard_source(rng, 0));
    EXPECT_EQ(r.rows, s.representative_rows);
}

TEST(Pvq, OneShardPerRowIsIdentity) {
    const auto data = uniform_matrix(40, 2, 7);
    const auto r = pvq(data, 40, quick(), RandomSource(1));
    std::vector<RowId> rows = r.rows;
    std::sort(rows.begin(), rows.end());
    std::vector<RowId> all(40);
    std::iota(all.begin(), all.end(), RowId{0});
    EXPECT_EQ(rows, all);
}

TEST(Pvq, RejectsInvalidShardCount) {
    const auto data = uniform_matrix(10, 2, 7);
    EXPECT_THROW(pvq(data, 0, quick(), RandomSource(1)), std::invalid_argument);
    EXPECT_THROW(pvq(data, 11, quick(), RandomSource(1)), std::invalid_argument);
}

TEST(Pvq, EqualsSequentialLoopOverPartition) {
    const auto data = uniform_matrix(3000, 4, 15);
    const RandomSource rng(99);
    const auto r = pvq(data, 5, quick(), rng, 3);
    const auto members = split_balanced(data.rows(), 5, partition_source(rng)).members();
    std::vector<RowId> expected;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto s = sample_shard(data.select(members[k]), quick(), shard_source(rng, k));
        expected.insert(expected.end(), s.representative_rows.begin(), s.representative_rows.end());
    }
    EXPECT_EQ(r.rows, expected);
}

TEST(Pvq, IndependentOfWorkerCount) {
    const auto data = uniform_matrix(4000, 3, 16);
    const auto a = pvq(data, 8, quick(), RandomSource(3), 1);
    const auto b = pvq(data, 8, quick(), RandomSource(3), 2);
    const auto c = pvq(data, 8, quick(), RandomSource(3), 8);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Pvq, PropertySizeBoundHolds) {
    auto gen = RandomSource(21).generator();
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 1 + gen.below(3000);
        const std::size_t L = 1 + gen.below(std::min<std::size_t>(n, 30));
        const auto data = uniform_matrix(n, 1 + gen.below(4), gen.next());
        const auto r = pvq(data, L, quick(), RandomSource(gen.next()));
        const auto sizes = split_balanced(n, L, partition_source(RandomSource(r.seed))).sizes();
        ASSERT_LE(r.rows.size(), size_bound(sizes));
        ASSERT_EQ(r.size_bound, size_bound(sizes));
    }
}

TEST(PvqToTarget, SmallTargetUsesOneShard) {
    const auto data = uniform_matrix(100, 2, 3);
    const auto r = pvq_to_target(data, 50, quick(), RandomSource(1));
    EXPECT_EQ(r.shard_count, 1u);
    EXPECT_LE(r.rows.size(), 50u);
    EXPECT_EQ(r.target, std::optional<std::size_t>(50));
}

TEST(PvqToTarget, TwoShardsForTwentyThousand) {
    const auto data = uniform_matrix(20'000, 2, 3);
    const auto r = pvq_to_target(data, 1000, quick(), RandomSource(1));
    EXPECT_EQ(r.shard_count, 2u);
    EXPECT_EQ(r.size_bound, 1000u);
    EXPECT_LE(r.rows.size(), 1000u);
}

TEST(PvqToTarget, RealizedSizeNearTarget) {
    testing::MixtureSpec spec{{30000, 15000, 4000, 1000}, 4, 5.0, 1.0, 3};
    const auto data = testing::gaussian_mixture(spec, 0).features;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = pvq_to_target(data, 2000, quick(), RandomSource(seed));
        EXPECT_GE(static_cast<double>(r.rows.size()), 0.5 * 2000);
        EXPECT_LE(r.rows.size(), r.size_bound);
    }
}

TEST(Pvq, LabelFree) {
    // The sampler never sees labels: the same matrix with or without them in
    // a Dataset yields the same rows.
    const auto ds = testing::gaussian_mixture({{500, 50, 5}, 3, 5.0, 1.0, 4}, 0);
    const Dataset without(ds.features);
    const auto a = pvq(ds.features, 2, quick(), RandomSource(6));
    const auto b = pvq(without.features, 2, quick(), RandomSource(6));
    EXPECT_EQ(a.rows, b.rows);
}

} // namespace
} // namespace pvq
