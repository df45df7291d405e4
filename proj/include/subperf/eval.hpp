#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "subperf/category.hpp"
#include "subperf/errors.hpp"
#include "subperf/features.hpp"
#include "subperf/regress.hpp"
#include "subperf/rng.hpp"
#include "subperf/stats.hpp"
#include "subperf/text.hpp"
#include "subperf/tree.hpp"

namespace subperf {

/// Rows are actual classes, columns predicted, both in PP, SP, GP order.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kCategoryCount>, kCategoryCount> counts{};

    std::size_t at(Category actual, Category predicted) const { return counts[index_of(actual)][index_of(predicted)]; }

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& r : counts) t += std::accumulate(r.begin(), r.end(), std::size_t{0});
        return t;
    }
    std::size_t actual_total(Category c) const {
        const auto& r = counts[index_of(c)];
        return std::accumulate(r.begin(), r.end(), std::size_t{0});
    }
    std::size_t predicted_total(Category c) const {
        std::size_t t = 0;
        for (const auto& r : counts) t += r[index_of(c)];
        return t;
    }
    std::size_t trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const Category> actual, std::span<const Category> predicted) {
    if (actual.size() != predicted.size()) throw DomainError("confusion: length mismatch");
    if (actual.empty()) throw DomainError("confusion: no rows");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) ++cm.counts[index_of(actual[i])][index_of(predicted[i])];
    return cm;
}

/// Undefined (0/0) entries are nullopt and render as "-".
struct ClassMetrics {
    Category cls = Category::PP;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_measure;
    std::optional<double> fp_rate;
};

inline ClassMetrics class_metrics(const ConfusionMatrix& cm, Category cls) {
    if (cm.total() == 0) throw DomainError("class_metrics: empty confusion matrix");
    const double tp = static_cast<double>(cm.at(cls, cls));
    const double predicted = static_cast<double>(cm.predicted_total(cls));
    const double actual = static_cast<double>(cm.actual_total(cls));
    const double negatives = static_cast<double>(cm.total()) - actual;
    const double fp = predicted - tp;
    ClassMetrics m;
    m.cls = cls;
    if (predicted > 0) m.precision = tp / predicted;
    if (actual > 0) m.recall = tp / actual;
    if (negatives > 0) m.fp_rate = fp / negatives;
    if (m.precision && m.recall) {
        const double s = *m.precision + *m.recall;
        // Both rates defined and zero: the harmonic mean is taken as 0.
        m.f_measure = s > 0.0 ? 2.0 * *m.precision * *m.recall / s : 0.0;
    }
    return m;
}

struct RegressionReport {
    std::size_t n = 0;
    double mean_error = 0.0;                // mean(predicted - actual)
    std::optional<double> std_error;        // sample sd of (predicted - actual)
    std::optional<double> correlation;      // Pearson(actual, predicted)
    double mae = 0.0;
    double rmse = 0.0;
};

/// Pearson correlation; nullopt when either series has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
    if (x.size() < 2) throw DomainError("pearson: need at least two points");
    const double mx = stats::mean(x);
    const double my = stats::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

// Error statistics allowing a single row (sd and correlation then undefined).
inline RegressionReport error_statistics(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw DomainError("regression_report: length mismatch");
    if (actual.empty()) throw DomainError("regression_report: no rows");
    RegressionReport r;
    r.n = actual.size();
    std::vector<double> diff(actual.size());
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        diff[i] = predicted[i] - actual[i];
        abs_sum += std::abs(diff[i]);
        sq_sum += diff[i] * diff[i];
    }
    const double n = static_cast<double>(actual.size());
    r.mean_error = stats::mean(diff);
    r.mae = abs_sum / n;
    r.rmse = std::max(std::sqrt(sq_sum / n), r.mae);
    if (actual.size() >= 2) {
        r.std_error = std::sqrt(stats::sample_variance(diff));
        r.correlation = pearson(actual, predicted);
    }
    return r;
}

}  // namespace detail

inline RegressionReport regression_report(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() < 2) throw DomainError("regression_report: need at least two rows");
    return detail::error_statistics(actual, predicted);
}

// ---------------------------------------------------------------------------
// Cross-validation

enum class ModelKind { tree, regression };

constexpr std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::tree ? "tree" : "regression"; }

/// Fold id per row: a seeded permutation dealt round-robin, so fold sizes
/// differ by at most one.
inline std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("cross-validation needs k >= 2");
    if (k > n) throw ConfigError("cross-validation: k (" + std::to_string(k) + ") exceeds rows (" + std::to_string(n) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::size_t> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % k;
    return fold;
}

/// Arithmetic mean over folds of per-fold statistics; undefined per-fold
/// values are left out of their average.
struct CvRegressionResult {
    std::size_t folds = 0;
    double mean_error = 0.0;
    std::optional<double> std_error;
    std::optional<double> correlation;
    double mae = 0.0;
    double rmse = 0.0;
    std::vector<RegressionReport> per_fold;
};

struct CvClassificationResult {
    std::size_t folds = 0;
    ClassMetrics averaged;
    std::vector<ClassMetrics> per_fold;
};

using CvResult = std::variant<CvRegressionResult, CvClassificationResult>;

namespace detail {

inline std::optional<double> average_defined(const std::vector<std::optional<double>>& xs) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : xs) {
        if (x) {
            s += *x;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold_rows(const std::vector<std::size_t>& fold,
                                                                              std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(i);
    return {train, test};
}

}  // namespace detail

/// Untransformed least squares per fold; predictions are the raw linear output.
inline CvRegressionResult cross_validate_regression(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
    if (!m.grades) throw ConfigError("regression cross-validation requires a numeric target");
    const auto fold = assign_folds(m.rows(), k, seed);
    CvRegressionResult out;
    out.folds = k;
    for (std::size_t f = 0; f < k; ++f) {
        const auto [train_idx, test_idx] = detail::fold_rows(fold, f);
        const auto train = m.select_rows(train_idx);
        const auto test = m.select_rows(test_idx);
        const auto model = fit_least_squares(train, *train.grades);
        std::vector<double> predicted;
        for (std::size_t i = 0; i < test.rows(); ++i) predicted.push_back(model.linear(test.row(i)));
        out.per_fold.push_back(detail::error_statistics(*test.grades, predicted));
    }
    std::vector<std::optional<double>> sd, corr;
    for (const auto& r : out.per_fold) {
        out.mean_error += r.mean_error / static_cast<double>(k);
        out.mae += r.mae / static_cast<double>(k);
        out.rmse += r.rmse / static_cast<double>(k);
        sd.push_back(r.std_error);
        corr.push_back(r.correlation);
    }
    out.std_error = detail::average_defined(sd);
    out.correlation = detail::average_defined(corr);
    return out;
}

/// Tree per fold (no rebalancing); per-fold metrics of `cls` are averaged.
inline CvClassificationResult cross_validate_tree(const FeatureMatrix& m, std::size_t k, std::uint64_t seed,
                                                  const TreeConfig& config = {}, Category cls = Category::PP) {
    if (!m.classes) throw ConfigError("tree cross-validation requires a categorical target");
    const auto fold = assign_folds(m.rows(), k, seed);
    CvClassificationResult out;
    out.folds = k;
    for (std::size_t f = 0; f < k; ++f) {
        const auto [train_idx, test_idx] = detail::fold_rows(fold, f);
        const auto train = m.select_rows(train_idx);
        const auto test = m.select_rows(test_idx);
        const auto model = train_tree(train, config);
        out.per_fold.push_back(class_metrics(confusion(*test.classes, model.predict(test)), cls));
    }
    std::vector<std::optional<double>> p, r, fm, fp;
    for (const auto& x : out.per_fold) {
        p.push_back(x.precision);
        r.push_back(x.recall);
        fm.push_back(x.f_measure);
        fp.push_back(x.fp_rate);
    }
    out.averaged.cls = cls;
    out.averaged.precision = detail::average_defined(p);
    out.averaged.recall = detail::average_defined(r);
    out.averaged.f_measure = detail::average_defined(fm);
    out.averaged.fp_rate = detail::average_defined(fp);
    return out;
}

inline CvResult cross_validate(const FeatureMatrix& m, ModelKind kind, std::size_t k, std::uint64_t seed) {
    if (kind == ModelKind::regression) return cross_validate_regression(m, k, seed);
    return cross_validate_tree(m, k, seed);
}

// ---------------------------------------------------------------------------
// Rendering

inline nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : cm.counts) rows.push_back(r);
    return {{"classes", {"PP", "SP", "GP"}}, {"rows_actual_columns_predicted", rows}};
}

inline nlohmann::json to_json(const ClassMetrics& m) {
    return {{"class", std::string(to_string(m.cls))},
            {"precision", opt_json(m.precision)},
            {"recall", opt_json(m.recall)},
            {"f_measure", opt_json(m.f_measure)},
            {"fp_rate", opt_json(m.fp_rate)}};
}

inline nlohmann::json to_json(const RegressionReport& r) {
    return {{"n", r.n},
            {"mean_error", r.mean_error},
            {"std_error", opt_json(r.std_error)},
            {"correlation", opt_json(r.correlation)},
            {"mae", r.mae},
            {"rmse", r.rmse}};
}

/// Text layout with the "<- classified as" header row.
inline std::string render_confusion(const ConfusionMatrix& cm, std::string_view caption = {},
                                    std::string_view header = "classified as") {
    std::ostringstream os;
    if (!caption.empty()) os << caption << '\n';
    os << "  PP   SP   GP   ← " << header << '\n';
    for (auto a : kCategories) {
        for (auto p : kCategories) {
            std::string cell = std::to_string(cm.at(a, p));
            os << std::string(4 - std::min<std::size_t>(4, cell.size()), ' ') << cell << ' ';
        }
        os << "  " << to_string(a) << '\n';
    }
    return os.str();
}

struct MetricsRow {
    std::string label;
    ClassMetrics metrics;
};

/// Precision / Recall / F-Measure / FP_rate table, two decimals, "-" for undefined.
inline std::string render_metrics_table(std::span<const MetricsRow> rows, std::string_view caption = {}) {
    std::size_t width = 8;
    for (const auto& r : rows) width = std::max(width, r.label.size() + 2);
    std::ostringstream os;
    if (!caption.empty()) os << caption << '\n';
    auto pad = [&](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    os << pad("", width) << pad("Precision", 11) << pad("Recall", 11) << pad("F-Measure", 11) << "FP_rate\n";
    for (const auto& r : rows) {
        os << pad(r.label, width) << pad(text::format_fixed(r.metrics.precision), 11)
           << pad(text::format_fixed(r.metrics.recall), 11) << pad(text::format_fixed(r.metrics.f_measure), 11)
           << text::format_fixed(r.metrics.fp_rate) << '\n';
    }
    return os.str();
}

}  // namespace subperf
