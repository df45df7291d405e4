#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace subperf;

namespace {

FeatureMatrix labelled(std::size_t n, std::size_t pp, std::size_t sp) {
    FeatureMatrix m;
    m.column_names = {"x"};
    m.values = Matrix(n, 1);
    std::vector<double> grades;
    for (std::size_t i = 0; i < n; ++i) {
        m.student_ids.push_back("s" + std::to_string(i));
        m.values(i, 0) = static_cast<double>(i);
        grades.push_back(i < pp ? 20.0 : i < pp + sp ? 65.0 : 95.0);
    }
    m.grades = grades;
    return with_categories(m);
}

}  // namespace

TEST(Labeling, CategoryThresholdsAreStrict) {
    EXPECT_EQ(categorize(32.0), Category::PP);
    EXPECT_EQ(categorize(109.0), Category::GP);
    EXPECT_EQ(categorize(80.0), Category::SP);
    EXPECT_EQ(categorize(50.0), Category::SP);
    EXPECT_EQ(categorize(49.99), Category::PP);
    EXPECT_EQ(categorize(80.01), Category::GP);
    EXPECT_THROW(categorize(-1.0), DomainError);
}

TEST(Labeling, SplitSizes) {
    const auto m = labelled(10, 3, 3);
    const auto [train, test] = split(m, {0.8, 1, true});
    EXPECT_EQ(train.rows(), 8u);
    EXPECT_EQ(test.rows(), 2u);
    const auto [tr2, te2] = split(m, {0.8, 1, false});
    EXPECT_EQ(tr2.rows(), 8u);
}

TEST(Labeling, SplitIsDeterministicAndDisjoint) {
    const auto m = labelled(57, 9, 20);
    const auto a = split_indices(*m.classes, {0.8, 5, true});
    const auto b = split_indices(*m.classes, {0.8, 5, true});
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto i : a.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), 57u);
    const auto c = split_indices(*m.classes, {0.8, 6, true});
    EXPECT_NE(a.train, c.train);
}

// Oracle: count PP rows on each side of the produced partition.
TEST(Labeling, StratificationKeepsClassShares) {
    const auto m = labelled(100, 10, 40);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = split_indices(*m.classes, {0.8, seed, true});
        std::size_t pp_train = 0, pp_test = 0;
        for (auto i : s.train) pp_train += (*m.classes)[i] == Category::PP;
        for (auto i : s.test) pp_test += (*m.classes)[i] == Category::PP;
        EXPECT_EQ(pp_train, 8u);
        EXPECT_EQ(pp_test, 2u);
        EXPECT_EQ(s.train.size(), 80u);
    }
}

TEST(Labeling, LargestRemainderHitsRoundedTotal) {
    // 7/11/13 rows: exact shares 5.6/8.8/10.4 sum to 24.8 -> 25 train rows.
    const auto m = labelled(31, 7, 11);
    const auto s = split_indices(*m.classes, {0.8, 3, true});
    EXPECT_EQ(s.train.size(), 25u);
    std::array<std::size_t, 3> per{};
    for (auto i : s.train) ++per[index_of((*m.classes)[i])];
    EXPECT_EQ(per[0], 6u);
    EXPECT_EQ(per[1], 9u);
    EXPECT_EQ(per[2], 10u);
}

TEST(Labeling, EmptyCategoryIsAllowed) {
    const auto m = labelled(10, 0, 5);
    EXPECT_NO_THROW(split(m, {0.8, 1, true}));
}

TEST(Labeling, TargetlessMatrixIsConfigError) {
    FeatureMatrix m;
    m.student_ids = {"a"};
    m.column_names = {"x"};
    m.values = Matrix(1, 1);
    EXPECT_THROW(split(m, {}), ConfigError);
    EXPECT_THROW(split(labelled(5, 1, 1), {1.0, 1, true}), ConfigError);
}
