#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "subperf/category.hpp"
#include "subperf/errors.hpp"
#include "subperf/features.hpp"
#include "subperf/rng.hpp"

namespace subperf {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    std::size_t percentage = 100;
    std::uint64_t seed = 1;
    Category target_class = Category::PP;

    void validate() const {
        if (k_neighbors < 1) throw ConfigError("smote: k must be at least 1");
        if (percentage % 100 != 0) throw ConfigError("smote: percentage must be a multiple of 100");
    }
};

inline constexpr std::string_view kSyntheticPrefix = "smote:";

/// Appends percentage/100 synthetic rows per minority row, each interpolated
/// between the row and one of its k nearest minority neighbours (Euclidean,
/// raw feature values). Original rows are untouched and keep their order.
///
/// When k exceeds minority_size - 1 it is clamped and a note is appended to
/// `warnings` if given.
inline FeatureMatrix oversample(const FeatureMatrix& train, const SmoteConfig& config,
                                std::vector<std::string>* warnings = nullptr) {
    config.validate();
    if (!train.classes) throw ConfigError("smote requires a categorical target");
    if (config.percentage == 0) return train;

    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if ((*train.classes)[i] == config.target_class) minority.push_back(i);
    }
    const std::size_t m = minority.size();
    if (m < 2) {
        throw RebalancingError("smote: class " + std::string(to_string(config.target_class)) + " has " +
                               std::to_string(m) + " instance(s); at least 2 are needed");
    }
    std::size_t k = config.k_neighbors;
    if (k > m - 1) {
        k = m - 1;
        if (warnings) {
            warnings->push_back("smote: k=" + std::to_string(config.k_neighbors) + " exceeds minority size - 1; using k=" +
                                std::to_string(k));
        }
    }

    const std::size_t d = train.cols();
    auto sq_distance = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        const auto ra = train.row(a);
        const auto rb = train.row(b);
        for (std::size_t j = 0; j < d; ++j) s += (ra[j] - rb[j]) * (ra[j] - rb[j]);
        return s;
    };

    // Exact neighbour lists; distance ties go to the earlier row.
    std::vector<std::vector<std::size_t>> neighbours(m);
    for (std::size_t a = 0; a < m; ++a) {
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(m - 1);
        for (std::size_t b = 0; b < m; ++b) {
            if (b != a) cand.emplace_back(sq_distance(minority[a], minority[b]), b);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t r = 0; r < k; ++r) neighbours[a].push_back(cand[r].second);
    }

    FeatureMatrix out = train;
    Rng rng(config.seed);
    const std::size_t per_row = config.percentage / 100;
    std::vector<double> synthetic(d);
    std::size_t serial = 0;
    for (std::size_t rep = 0; rep < per_row; ++rep) {
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t base = minority[a];
            const std::size_t nn = minority[neighbours[a][rng.index(k)]];
            const double gap = rng.uniform01();
            const auto x = train.row(base);
            const auto y = train.row(nn);
            for (std::size_t j = 0; j < d; ++j) synthetic[j] = x[j] + gap * (y[j] - x[j]);
            out.values.append_row(synthetic);
            out.student_ids.push_back(std::string(kSyntheticPrefix) + std::to_string(serial++));
            out.classes->push_back(config.target_class);
            if (out.grades) {
                const double gx = (*train.grades)[base];
                out.grades->push_back(gx + gap * ((*train.grades)[nn] - gx));
            }
        }
    }
    return out;
}

}  // namespace subperf
