#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace subperf;
using testing_support::ts;

TEST(Text, SplitKeepsEmptyFields) {
    EXPECT_EQ(text::split("a,,b,", ','), (std::vector<std::string>{"a", "", "b", ""}));
    EXPECT_EQ(text::trim("  x \t"), "x");
}

TEST(Text, NumbersParseStrictly) {
    EXPECT_DOUBLE_EQ(*text::parse_double("2.5"), 2.5);
    EXPECT_FALSE(text::parse_double("2.5x"));
    EXPECT_FALSE(text::parse_double(""));
    EXPECT_EQ(*text::parse_int("-7"), -7);
    EXPECT_FALSE(text::parse_int("7.0"));
}

TEST(Text, FixedFormatRoundsHalfUp) {
    EXPECT_EQ(text::format_fixed(0.125), "0.13");
    EXPECT_EQ(text::format_fixed(0.0769), "0.08");
    EXPECT_EQ(text::format_fixed(2.0 / 3.0), "0.67");
    EXPECT_EQ(text::format_fixed(std::optional<double>{}), "-");
    EXPECT_EQ(text::format_double(0.1), "0.1");
}

TEST(Time, RoundTripsWithAndWithoutMilliseconds) {
    for (const char* s : {"2016-10-26T18:00:00Z", "2016-02-29T23:59:59.123Z", "2000-01-01T00:00:00.5Z"}) {
        const auto t = parse_timestamp(s);
        ASSERT_TRUE(t) << s;
        EXPECT_EQ(parse_timestamp(format_timestamp(*t)), t);
    }
    EXPECT_EQ(format_timestamp(ts("2000-01-01T00:00:00.5Z")), "2000-01-01T00:00:00.500Z");
}

TEST(Time, RejectsMalformed) {
    for (const char* s : {"2016-10-26 18:00:00Z", "2016-13-01T00:00:00Z", "2016-02-30T00:00:00Z", "2016-10-26T18:00:00",
                          "2016-10-26T24:00:00Z", "2016-10-26T18:00:00.1234Z"}) {
        EXPECT_FALSE(parse_timestamp(s)) << s;
    }
}

TEST(Time, HoursBetweenAndAddHours) {
    const auto a = ts("2016-10-01T00:00:00Z");
    const auto b = ts("2016-10-02T12:30:00Z");
    EXPECT_DOUBLE_EQ(hours_between(a, b), 36.5);
    EXPECT_DOUBLE_EQ(hours_between(b, a), -36.5);
    EXPECT_EQ(add_hours(a, 36.5), b);
    // Millisecond resolution bounds the round-trip error.
    const double h = 17.123456789;
    EXPECT_LE(std::abs(hours_between(a, add_hours(a, h)) - h), 0.5 / 3.6e6 + 1e-12);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, IndexAndIntegerStayInRange) {
    Rng r(7);
    std::set<long long> seen;
    for (int i = 0; i < 2000; ++i) {
        EXPECT_LT(r.index(5), 5u);
        const auto v = r.integer(-2, 2);
        EXPECT_GE(v, -2);
        EXPECT_LE(v, 2);
        seen.insert(v);
        const double u = r.uniform01();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    EXPECT_EQ(seen.size(), 5u);
}

TEST(Rng, NormalMomentsAreClose) {
    Rng r(3);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) xs.push_back(r.normal(2.0, 3.0));
    EXPECT_NEAR(stats::mean(xs), 2.0, 0.1);
    EXPECT_NEAR(std::sqrt(stats::sample_variance(xs)), 3.0, 0.1);
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng r(9);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    r.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(Rng, DerivedSeedsAreDistinct) {
    std::set<std::uint64_t> s;
    for (std::uint64_t i = 0; i < 100; ++i) s.insert(derive_seed(1, i));
    EXPECT_EQ(s.size(), 100u);
}

// Reference values from scipy.special.betainc / scipy.stats.f.sf.
TEST(Stats, IncompleteBetaMatchesReference) {
    EXPECT_NEAR(stats::incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);
    EXPECT_NEAR(stats::incomplete_beta(0.5, 0.5, 0.3), 0.36901011956554536, 1e-12);
    EXPECT_NEAR(stats::incomplete_beta(10, 20, 0.25), 0.16630494959787945, 1e-12);
    EXPECT_NEAR(stats::incomplete_beta(50, 60, 0.5), 0.830907293901669, 1e-11);
    EXPECT_NEAR(stats::incomplete_beta(1, 1, 0.7), 0.7, 1e-14);
    EXPECT_EQ(stats::incomplete_beta(2, 3, 0.0), 0.0);
    EXPECT_EQ(stats::incomplete_beta(2, 3, 1.0), 1.0);
}

TEST(Stats, FSurvivalMatchesReference) {
    EXPECT_NEAR(stats::f_survival(3.5, 2, 30), 0.043032141544536655, 1e-12);
    EXPECT_NEAR(stats::f_survival(1.2, 5, 100), 0.3147401407511829, 1e-12);
    EXPECT_NEAR(stats::f_survival(0.5, 1, 10), 0.49564750438311955, 1e-12);
    EXPECT_NEAR(stats::f_survival(10, 16, 83) / 2.0303818222269086e-13, 1.0, 1e-8);
    EXPECT_NEAR(stats::f_survival(250, 16, 325) / 8.802023239797658e-172, 1.0, 1e-7);
}

TEST(Stats, NormalQuantileInvertsCdfByBisection) {
    for (double p : {1e-6, 0.001, 0.025, 0.3, 0.5, 0.77, 0.9, 0.999999}) {
        double lo = -10.0, hi = 10.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (stats::normal_cdf(mid) < p ? lo : hi) = mid;
        }
        EXPECT_NEAR(stats::normal_quantile(p), 0.5 * (lo + hi), 1e-9) << p;
    }
    EXPECT_NEAR(stats::normal_quantile(0.025), -1.9599639845400545, 1e-12);
    EXPECT_EQ(stats::normal_quantile(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(stats::normal_quantile(1.5), DomainError);
}

TEST(Stats, FiveNumberSummaryUsesTukeyHinges) {
    const auto f = stats::five_number_summary({7, 1, 3, 9, 5});
    EXPECT_EQ(f.min, 1);
    EXPECT_EQ(f.lower_hinge, 3);
    EXPECT_EQ(f.median, 5);
    EXPECT_EQ(f.upper_hinge, 7);
    EXPECT_EQ(f.max, 9);
    const auto g = stats::five_number_summary({1, 2, 3, 4, 5, 6});
    EXPECT_EQ(g.lower_hinge, 2);
    EXPECT_EQ(g.median, 3.5);
    EXPECT_EQ(g.upper_hinge, 5);
    EXPECT_THROW(stats::five_number_summary({}), DomainError);
}

TEST(Linalg, QrSolvesSquareSystem) {
    Matrix a(3, 3);
    const double vals[3][3] = {{4, 1, 2}, {1, 5, 3}, {2, 3, 6}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = vals[i][j];
    const std::vector<double> x_true{1.0, -2.0, 0.5};
    std::vector<double> b(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b[i] += vals[i][j] * x_true[j];
    const HouseholderQr qr(a);
    const auto x = qr.solve(b);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(x[i], x_true[i], 1e-12);
    EXPECT_TRUE(qr.deficient_columns().empty());
}

TEST(Linalg, DetectsDependentColumn) {
    Matrix a(4, 3);
    for (int i = 0; i < 4; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = i;
        a(i, 2) = 2.0 * i + 3.0;
    }
    EXPECT_EQ(HouseholderQr(a).deficient_columns(), std::vector<std::size_t>{2});
}
