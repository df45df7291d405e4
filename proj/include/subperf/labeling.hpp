#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "subperf/category.hpp"
#include "subperf/errors.hpp"
#include "subperf/features.hpp"
#include "subperf/rng.hpp"

namespace subperf {

inline constexpr double kGoodAbove = 80.0;
inline constexpr double kPoorBelow = 50.0;

/// Raw exam points to category: > 80 is GP, < 50 is PP, otherwise SP.
inline Category categorize(double grade) {
    if (!(grade >= 0.0)) throw DomainError("categorize: grade must be non-negative");
    if (grade > kGoodAbove) return Category::GP;
    if (grade < kPoorBelow) return Category::PP;
    return Category::SP;
}

inline std::vector<Category> categorize(std::span<const double> grades) {
    std::vector<Category> out;
    out.reserve(grades.size());
    for (double g : grades) out.push_back(categorize(g));
    return out;
}

/// Copy of `m` whose categorical target is derived from its numeric grades.
inline FeatureMatrix with_categories(FeatureMatrix m) {
    if (!m.grades) throw ConfigError("matrix has no numeric target to categorize");
    m.classes = categorize(*m.grades);
    return m;
}

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const {
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
    }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Row indices of a train/test partition, each side in ascending order.
///
/// |train| == round(train_fraction * N). With stratification, per-category
/// quotas are allocated by largest remainder so each category's train count
/// is within one of its exact share.
inline SplitIndices split_indices(std::span<const Category> labels, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = labels.size();
    const auto train_total = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    Rng rng(spec.seed);

    std::vector<std::vector<std::size_t>> groups;
    if (spec.stratified) {
        groups.resize(kCategoryCount);
        for (std::size_t i = 0; i < n; ++i) groups[index_of(labels[i])].push_back(i);
    } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }

    std::vector<std::size_t> quota(groups.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double exact = spec.train_fraction * static_cast<double>(groups[g].size());
        quota[g] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[g];
        remainders.emplace_back(exact - std::floor(exact), g);
    }
    // Larger remainder first; ties go to the earlier group.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < train_total && r < remainders.size(); ++r) {
        const auto g = remainders[r].second;
        if (quota[g] < groups[g].size()) {
            ++quota[g];
            ++assigned;
        }
    }

    SplitIndices out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto members = groups[g];
        rng.shuffle(members);
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[g]));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(quota[g]), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

/// Categories used to stratify a matrix: its categorical target if present,
/// otherwise its categorized grades.
inline std::vector<Category> stratification_labels(const FeatureMatrix& m) {
    if (m.classes) return *m.classes;
    if (m.grades) return categorize(*m.grades);
    throw ConfigError("split requires a target column");
}

inline std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& m, const SplitSpec& spec) {
    const auto labels = stratification_labels(m);
    const auto idx = split_indices(labels, spec);
    return {m.select_rows(idx.train), m.select_rows(idx.test)};
}

}  // namespace subperf
