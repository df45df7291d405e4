#include <gtest/gtest.h>

#include <functional>

#include "oracles.hpp"
#include "support.hpp"

using namespace subperf;

namespace {

FeatureMatrix table(const std::vector<std::vector<double>>& rows, const std::vector<Category>& cls) {
    FeatureMatrix m;
    for (std::size_t j = 0; j < rows[0].size(); ++j) m.column_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.student_ids.push_back("r" + std::to_string(i));
        m.values.append_row(rows[i]);
    }
    m.classes = cls;
    return m;
}

FeatureMatrix random_table(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t classes) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<Category> cls;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r;
        // Small integer grid so duplicate values and ties occur.
        for (std::size_t j = 0; j < d; ++j) r.push_back(static_cast<double>(rng.integer(0, 6)));
        rows.push_back(r);
        cls.push_back(kCategories[rng.index(classes)]);
    }
    return table(rows, cls);
}

double accuracy(const TreeModel& t, const FeatureMatrix& m) {
    const auto p = t.predict(m);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == (*m.classes)[i];
    return static_cast<double>(ok) / static_cast<double>(p.size());
}

// Walks the tree with the training rows and checks each internal node
// against the brute-force enumerator.
void expect_oracle_splits(const TreeModel& t, const FeatureMatrix& m) {
    std::function<void(int, std::vector<std::size_t>)> visit = [&](int at, std::vector<std::size_t> rows) {
        const auto& n = t.nodes()[static_cast<std::size_t>(at)];
        if (n.leaf) return;
        const auto ref = oracle::best_split(m, rows);
        ASSERT_TRUE(ref.has_value());
        EXPECT_EQ(n.feature, ref->feature);
        EXPECT_DOUBLE_EQ(n.threshold, ref->threshold);
        std::vector<std::size_t> l, r;
        for (auto i : rows) (m.values(i, n.feature) <= n.threshold ? l : r).push_back(i);
        visit(n.left, l);
        visit(n.right, r);
    };
    std::vector<std::size_t> all(m.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    visit(0, all);
}

}  // namespace

TEST(Tree, Entropy) {
    const std::vector<std::size_t> even{4, 4}, pure{8, 0}, three{2, 3, 5};
    EXPECT_DOUBLE_EQ(entropy(even), 1.0);
    EXPECT_DOUBLE_EQ(entropy(pure), 0.0);
    EXPECT_NEAR(entropy(three), 1.4855, 5e-5);
    EXPECT_NEAR(entropy(three), oracle::entropy({2, 3, 5}), 1e-12);
    EXPECT_NEAR(entropy(ClassCounts{5, 5, 5}), std::log2(3.0), 1e-12);
    const std::vector<std::size_t> zero{0, 0};
    EXPECT_THROW(entropy(zero), DomainError);
}

TEST(Tree, GainRatio) {
    const std::vector<std::size_t> parent{4, 4};
    const std::vector<std::vector<std::size_t>> perfect{{4, 0}, {0, 4}};
    const auto g = gain_ratio_parts(parent, perfect);
    EXPECT_DOUBLE_EQ(g.gain, 1.0);
    EXPECT_DOUBLE_EQ(g.split_info, 1.0);
    EXPECT_DOUBLE_EQ(g.ratio, 1.0);

    const std::vector<std::vector<std::size_t>> same{{2, 2}, {2, 2}};
    EXPECT_NEAR(gain_ratio(parent, same), 0.0, 1e-15);

    const std::vector<std::size_t> p55{5, 5};
    const std::vector<std::vector<std::size_t>> mixed{{4, 1}, {1, 4}};
    EXPECT_NEAR(gain_ratio(p55, mixed), 0.2781, 5e-5);

    const std::vector<std::vector<std::size_t>> bad{{4, 0}, {0, 3}};
    EXPECT_THROW(gain_ratio(parent, bad), DomainError);
}

TEST(Tree, GainRatioIsInvariantUnderClassRelabeling) {
    const std::vector<std::size_t> parent{3, 5, 7}, parent_perm{7, 3, 5};
    const std::vector<std::vector<std::size_t>> kids{{1, 4, 2}, {2, 1, 5}}, kids_perm{{2, 1, 4}, {5, 2, 1}};
    EXPECT_NEAR(gain_ratio(parent, kids), gain_ratio(parent_perm, kids_perm), 1e-14);
}

TEST(Tree, BestSplitSimpleCases) {
    const auto m = table({{1}, {2}, {3}, {4}}, {Category::PP, Category::PP, Category::GP, Category::GP});
    const auto s = best_split(m);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->threshold, 2.5);
    EXPECT_EQ(s->feature_name, "f0");

    const auto pure = table({{1}, {2}, {3}}, {Category::SP, Category::SP, Category::SP});
    EXPECT_FALSE(best_split(pure));
}

TEST(Tree, BestSplitMatchesEnumerationOnEightRows) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto m = random_table(seed, 8, 2, 2);
        const auto got = best_split(m);
        std::vector<std::size_t> rows(8);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const auto ref = oracle::best_split(m, rows);
        ASSERT_EQ(got.has_value(), ref.has_value()) << seed;
        if (!got) continue;
        EXPECT_EQ(got->feature, ref->feature) << seed;
        EXPECT_DOUBLE_EQ(got->threshold, ref->threshold) << seed;
        EXPECT_NEAR(got->ratio, ref->ratio, 1e-12) << seed;
        EXPECT_GT(got->gain, 0.0);
    }
}

TEST(Tree, TieGoesToEarlierFeatureThenLowerThreshold) {
    // Both features separate the classes identically.
    const auto m = table({{1, 10}, {2, 20}, {3, 30}, {4, 40}}, {Category::PP, Category::PP, Category::GP, Category::GP});
    EXPECT_EQ(best_split(m)->feature, 0u);
    // Symmetric class pattern: thresholds 1.5 and 3.5 score the same.
    const auto sym = table({{1}, {2}, {3}, {4}}, {Category::PP, Category::GP, Category::GP, Category::PP});
    const auto s = best_split(sym);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->threshold, 1.5);
}

TEST(Tree, TrainsPureLeafAndSimpleSplit) {
    const auto pure = table({{1}, {2}, {3}}, {Category::SP, Category::SP, Category::SP});
    const auto t = train_tree(pure);
    EXPECT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.root().label, Category::SP);
    const std::vector<double> any{123.0};
    EXPECT_EQ(t.predict(any), Category::SP);

    const auto m = table({{1}, {2}, {3}, {4}}, {Category::PP, Category::PP, Category::GP, Category::GP});
    const auto s = train_tree(m);
    ASSERT_FALSE(s.root().leaf);
    EXPECT_EQ(s.root().threshold, 2.5);
    EXPECT_EQ(s.leaf_count(), 2u);
    const std::vector<double> at{2.5}, above{2.6};
    EXPECT_EQ(s.predict(at), Category::PP);
    EXPECT_EQ(s.predict(above), Category::GP);
}

TEST(Tree, XorStyleSetGrowsDepthTwoMatchingOracle) {
    const auto m = table({{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 3}, {4, 3}, {3, 4}, {4, 4}, {1, 3}, {2, 4}, {3, 1}},
                         {Category::PP, Category::PP, Category::PP, Category::PP, Category::PP, Category::PP,
                          Category::PP, Category::PP, Category::GP, Category::GP, Category::GP});
    TreeConfig c;
    c.pruning = false;
    c.min_leaf = 1;
    const auto t = train_tree(m, c);
    EXPECT_GE(t.depth(), 2u);
    EXPECT_EQ(accuracy(t, m), 1.0);
    expect_oracle_splits(t, m);
}

TEST(Tree, UnprunedTreeGrownToPurityReproducesTrainingLabels) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = random_table(seed, 20, 2, 3);
        // Give every row a distinct point so purity is reachable.
        for (std::size_t i = 0; i < m.rows(); ++i) m.values(i, 0) += 0.001 * static_cast<double>(i);
        TreeConfig c;
        c.pruning = false;
        c.min_leaf = 1;
        EXPECT_EQ(accuracy(train_tree(m, c), m), 1.0) << seed;
    }
}

TEST(Tree, SplitsMatchOracleOnRandomTables) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto m = random_table(seed, 25, 3, 3);
        TreeConfig c;
        c.pruning = false;
        expect_oracle_splits(train_tree(m, c), m);
    }
}

TEST(Tree, PruningNeverImprovesTrainingAccuracy) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto m = random_table(seed, 40, 3, 3);
        TreeConfig pruned;
        TreeConfig full;
        full.pruning = false;
        const auto a = train_tree(m, pruned);
        const auto b = train_tree(m, full);
        EXPECT_LE(accuracy(a, m), accuracy(b, m) + 1e-12) << seed;
        EXPECT_LE(a.nodes().size(), b.nodes().size());
    }
}

TEST(Tree, PruningCollapsesNoiseSplit) {
    // One stray label among many: the split that isolates it is not worth its estimated error.
    std::vector<std::vector<double>> rows;
    std::vector<Category> cls;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({static_cast<double>(i)});
        cls.push_back(i == 10 ? Category::PP : Category::GP);
    }
    const auto m = table(rows, cls);
    TreeConfig full;
    full.pruning = false;
    EXPECT_FALSE(train_tree(m, full).root().leaf);
    EXPECT_TRUE(train_tree(m).root().leaf);
}

TEST(Tree, PessimisticErrorsMatchReferenceTable) {
    // Values of the C4.5 upper-bound estimate at CF = 0.25.
    EXPECT_NEAR(pessimistic_extra_errors(2, 0, 0.25), 1.0, 1e-12);
    EXPECT_NEAR(pessimistic_extra_errors(6, 0, 0.25), 6.0 * (1.0 - std::pow(0.25, 1.0 / 6.0)), 1e-12);
    EXPECT_NEAR(pessimistic_extra_errors(1, 1, 0.25), 0.0, 1e-12);
    // n = 16, e = 1: (f + z^2/2n + z sqrt(f/n - f^2/n + z^2/4n^2)) / (1 + z^2/n) with f = 1.5/16.
    const double z = 0.6744897501960817, n = 16, f = 1.5 / 16;
    const double r = (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n);
    EXPECT_NEAR(pessimistic_extra_errors(16, 1, 0.25), r * n - 1, 1e-12);
}

TEST(Tree, MajorityTieBreak) {
    EXPECT_EQ(majority({2, 2, 1}), Category::PP);
    EXPECT_EQ(majority({0, 3, 3}), Category::SP);
}

TEST(Tree, DeterministicAndJsonRoundTrip) {
    const auto m = random_table(77, 30, 3, 3);
    TreeConfig c;
    c.pruning = false;
    const auto a = train_tree(m, c);
    EXPECT_EQ(a, train_tree(m, c));
    const auto back = TreeModel::from_json(nlohmann::json::parse(a.to_json().dump()));
    EXPECT_EQ(back, a);
    EXPECT_EQ(back.predict(m), a.predict(m));
    EXPECT_THROW(TreeModel::from_json(nlohmann::json{{"model", "c45"}}), ConfigError);
}

TEST(Tree, PredictionErrors) {
    const auto m = table({{1, 5}, {2, 5}, {3, 5}, {4, 5}}, {Category::PP, Category::PP, Category::GP, Category::GP});
    const auto t = train_tree(m);
    const std::vector<double> short_row{1.0};
    EXPECT_THROW(t.predict(short_row), PredictionError);
    EXPECT_THROW(t.predict(std::map<std::string, double>{{"f1", 1.0}}), PredictionError);
    EXPECT_EQ(t.predict(std::map<std::string, double>{{"f0", 1.0}}), Category::PP);
    // Only the tested column must be present in a matrix.
    auto only_f0 = m.select_columns(std::vector<std::size_t>{0});
    EXPECT_EQ(t.predict(only_f0).size(), 4u);
    auto only_f1 = m.select_columns(std::vector<std::size_t>{1});
    EXPECT_THROW(t.predict(only_f1), PredictionError);
}

TEST(Tree, EmptyTrainingSetIsTrainingError) {
    FeatureMatrix m;
    m.column_names = {"x"};
    m.classes = std::vector<Category>{};
    EXPECT_THROW(train_tree(m), TrainingError);
}
