#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "pvq/metrics.hpp"
#include "support/fixtures.hpp"

namespace pvq::metrics {
namespace {

// Rows = predicted, columns = actual. Ten instances, five per true class:
// class 0 always right, class 1 right three times and called class 0 twice.
const auto kFiveTwoThree = ConfusionMatrix::from_counts({{5, 2}, {0, 3}});

ConfusionMatrix random_matrix(Generator& gen, std::size_t k, std::uint64_t max_count) {
    std::vector<std::vector<std::uint64_t>> rows(k, std::vector<std::uint64_t>(k));
    for (auto& r : rows)
        for (auto& v : r) v = gen.below(max_count + 1);
    rows[0][0] += 1; // never empty
    return ConfusionMatrix::from_counts(rows);
}

TEST(Confusion, IdentityForPerfectPrediction) {
    const LabelVector t{"a", "b"};
    const auto m = confusion(t, t, {"a", "b"});
    EXPECT_EQ(m.at(0, 0), 1u);
    EXPECT_EQ(m.at(1, 1), 1u);
    EXPECT_EQ(m.at(0, 1), 0u);
    EXPECT_EQ(m.at(1, 0), 0u);
}

TEST(Confusion, SingleOffDiagonalCell) {
    const auto m = confusion(LabelVector{"a", "a"}, LabelVector{"b", "b"}, {"a", "b"});
    EXPECT_EQ(m.at(1, 0), 2u);
    EXPECT_EQ(m.total(), 2u);
    EXPECT_EQ(m.trace(), 0u);
}

TEST(Confusion, DirectTally) {
    const auto m = confusion(LabelVector{"a", "b", "b", "c"}, LabelVector{"a", "b", "c", "c"}, {"a", "b", "c"});
    EXPECT_EQ(m.at(0, 0), 1u);
    EXPECT_EQ(m.at(1, 1), 1u);
    EXPECT_EQ(m.at(2, 2), 1u);
    EXPECT_EQ(m.at(2, 1), 1u);
    EXPECT_EQ(m.total(), 4u);
}

TEST(Confusion, RejectsUndeclaredLabelsAndLengthMismatch) {
    EXPECT_THROW(confusion(LabelVector{"a"}, LabelVector{"z"}, {"a"}), std::invalid_argument);
    EXPECT_THROW(confusion(LabelVector{"a"}, LabelVector{"a", "a"}, {"a"}), std::invalid_argument);
    EXPECT_THROW(ConfusionMatrix({"a", "a"}), std::invalid_argument);
}

TEST(Confusion, UniverseIsSortedUnion) {
    const LabelVector train{"b", "a", "b"}, test{"c", "a"};
    EXPECT_EQ(label_universe({train, test}), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Accuracy, Examples) {
    EXPECT_DOUBLE_EQ(accuracy(ConfusionMatrix::from_counts({{1, 0}, {0, 1}})), 1.0);
    EXPECT_NEAR(accuracy(kFiveTwoThree), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(accuracy(ConfusionMatrix::from_counts({{0, 4}, {3, 0}})), 0.0);
    EXPECT_THROW(accuracy(ConfusionMatrix::from_counts({{0, 0}, {0, 0}})), std::invalid_argument);
}

TEST(MacroRecall, Examples) {
    EXPECT_NEAR(macro_recall(kFiveTwoThree), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(macro_recall(ConfusionMatrix::from_counts({{3, 0}, {0, 9}})), 1.0);
    // Class 2 is never true and never predicted: mean over classes 0 and 1.
    const auto m = ConfusionMatrix::from_counts({{4, 1, 0}, {0, 1, 0}, {0, 0, 0}});
    EXPECT_NEAR(macro_recall(m), (1.0 + 0.5) / 2.0, 1e-12);
    EXPECT_THROW(macro_recall(ConfusionMatrix::from_counts({{0}})), std::invalid_argument);
}

TEST(MacroRecall, ColumnsAreTruth) {
    // Same counts laid out the other way: true totals are 7 and 3.
    const auto m = ConfusionMatrix::from_counts({{5, 0}, {2, 3}});
    EXPECT_NEAR(macro_recall(m), (5.0 / 7.0 + 1.0) / 2.0, 1e-12);
    EXPECT_NEAR(weighted_precision(m), 0.7 * 1.0 + 0.3 * 0.6, 1e-12);
    EXPECT_NEAR(accuracy(m), 0.8, 1e-12);
}

TEST(WeightedPrecision, Examples) {
    EXPECT_NEAR(weighted_precision(kFiveTwoThree), 6.0 / 7.0, 1e-12);
    EXPECT_DOUBLE_EQ(weighted_precision(ConfusionMatrix::from_counts({{2, 0}, {0, 2}})), 1.0);
    // Always predicts class 0 on balanced truth.
    EXPECT_NEAR(weighted_precision(ConfusionMatrix::from_counts({{5, 5}, {0, 0}})), 0.25, 1e-12);
}

TEST(BalancedAccuracy, EqualsMacroRecall) {
    EXPECT_DOUBLE_EQ(balanced_accuracy(ConfusionMatrix::from_counts({{7, 0}, {0, 7}})), 1.0);
    EXPECT_NEAR(balanced_accuracy(kFiveTwoThree), 0.8, 1e-12);
}

TEST(BalancedAccuracy, ChanceLevelPredictorNearHalf) {
    auto gen = RandomSource(2).generator();
    LabelVector truth, pred;
    for (int i = 0; i < 10'000; ++i) {
        truth.push_back(gen.below(2) ? "a" : "b");
        pred.push_back(gen.below(2) ? "a" : "b");
    }
    EXPECT_NEAR(balanced_accuracy(confusion(truth, pred, {"a", "b"})), 0.5, 0.02);
}

TEST(Mcc, Examples) {
    EXPECT_DOUBLE_EQ(mcc_multiclass(ConfusionMatrix::from_counts({{3, 0, 0}, {0, 4, 0}, {0, 0, 5}})), 1.0);
    EXPECT_DOUBLE_EQ(mcc_multiclass(ConfusionMatrix::from_counts({{3, 4, 5}, {0, 0, 0}, {0, 0, 0}})), 0.0);
    EXPECT_NEAR(mcc_multiclass(ConfusionMatrix::from_counts({{2, 1}, {1, 2}})), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(mcc_multiclass(ConfusionMatrix::from_counts({{0, 3}, {3, 0}})), -1.0, 1e-12);
}

TEST(Mcc, PropertyMatchesBinaryFormula) {
    auto gen = RandomSource(6).generator();
    for (int t = 0; t < 1000; ++t) {
        const auto m = random_matrix(gen, 2, 50);
        const double oracle = testing::binary_mcc(double(m.at(0, 0)), double(m.at(0, 1)), double(m.at(1, 0)),
                                                  double(m.at(1, 1)));
        ASSERT_NEAR(mcc_multiclass(m), oracle, 1e-12);
    }
}

TEST(Metrics, PropertyAccuracyIsTruthWeightedRecall) {
    auto gen = RandomSource(7).generator();
    for (int t = 0; t < 1000; ++t) {
        const auto m = random_matrix(gen, 2 + gen.below(6), 30);
        double weighted = 0.0;
        for (std::size_t c = 0; c < m.classes(); ++c) {
            const auto tc = m.actual_total(c);
            if (tc == 0) continue;
            weighted += (double(tc) / double(m.total())) * (double(m.at(c, c)) / double(tc));
        }
        ASSERT_NEAR(accuracy(m), weighted, 1e-12);
    }
}

TEST(Metrics, PropertyRangesAndRelabelingInvariance) {
    auto gen = RandomSource(8).generator();
    for (int t = 0; t < 300; ++t) {
        const std::size_t k = 2 + gen.below(5);
        const auto m = random_matrix(gen, k, 20);
        const auto s = evaluate(m);
        for (double v : {s.accuracy, s.macro_recall, s.weighted_precision, s.balanced_accuracy}) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
        ASSERT_GE(s.mcc, -1.0);
        ASSERT_LE(s.mcc, 1.0);

        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        gen.shuffle(std::span<std::size_t>(perm));
        std::vector<std::vector<std::uint64_t>> rows(k, std::vector<std::uint64_t>(k));
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t a = 0; a < k; ++a) rows[perm[p]][perm[a]] = m.at(p, a);
        const auto s2 = evaluate(ConfusionMatrix::from_counts(rows));
        ASSERT_NEAR(s.accuracy, s2.accuracy, 1e-12);
        ASSERT_NEAR(s.macro_recall, s2.macro_recall, 1e-12);
        ASSERT_NEAR(s.weighted_precision, s2.weighted_precision, 1e-12);
        ASSERT_NEAR(s.mcc, s2.mcc, 1e-12);
    }
}

} // namespace
} // namespace pvq::metrics
