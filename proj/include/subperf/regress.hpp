#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subperf/errors.hpp"
#include "subperf/features.hpp"
#include "subperf/linalg.hpp"
#include "subperf/stats.hpp"
#include "subperf/text.hpp"

namespace subperf {

/// Response shift and power: forward(y) = (y + offset)^lambda, or
/// log(y + offset) when |lambda| < 0.01.
struct PowerTransform {
    double lambda = 1.0;
    double offset = 0.0;

    static constexpr double kLogBand = 0.01;

    bool is_log() const noexcept { return std::abs(lambda) < kLogBand; }
    bool is_identity() const noexcept { return lambda == 1.0 && offset == 0.0; }

    double forward(double y) const {
        const double shifted = y + offset;
        if (lambda == 1.0) return shifted;
        if (!(shifted > 0.0)) throw DomainError("power transform: y + offset must be positive");
        return is_log() ? std::log(shifted) : std::pow(shifted, lambda);
    }

    /// Raw response for a transformed value, or nullopt where the inverse is
    /// undefined (non-positive base under a fractional power).
    std::optional<double> inverse(double z) const {
        if (lambda == 1.0) return z - offset;
        if (is_log()) return std::exp(z) - offset;
        if (!(z > 0.0)) return std::nullopt;
        return std::pow(z, 1.0 / lambda) - offset;
    }

    bool operator==(const PowerTransform&) const = default;
};

struct FitStats {
    double r2 = 0.0;
    double residual_std = 0.0;
    double f_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t p = 0;

    bool operator==(const FitStats&) const = default;
};

struct RegressionModel {
    std::vector<double> coefficients;  // intercept first
    PowerTransform transform;
    std::vector<std::string> column_names;
    FitStats fit_stats;

    /// beta0 + sum beta_i x_i, in the transformed scale.
    double linear(std::span<const double> row) const {
        double z = coefficients[0];
        for (std::size_t j = 0; j < row.size(); ++j) z += coefficients[j + 1] * row[j];
        return z;
    }

    bool operator==(const RegressionModel&) const = default;
};

struct Diagnostics {
    std::vector<double> fitted;
    std::vector<double> residuals;
    std::vector<double> leverage;
    std::vector<std::optional<double>> studentized;  // nullopt where h_ii == 1 or s == 0
};

namespace detail {

inline Matrix design_matrix(const FeatureMatrix& x) {
    Matrix a(x.rows(), x.cols() + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        a(i, 0) = 1.0;
        const auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) a(i, j + 1) = r[j];
    }
    return a;
}

inline std::string design_column_name(const FeatureMatrix& x, std::size_t j) {
    return j == 0 ? std::string("(intercept)") : x.column_names[j - 1];
}

// Fit on an already-transformed response.
inline RegressionModel fit_response(const FeatureMatrix& x, std::span<const double> z, PowerTransform transform) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (z.size() != n) throw DomainError("least squares: response length does not match rows");
    if (n <= p + 1) {
        throw DomainError("least squares: need more rows (" + std::to_string(n) + ") than parameters (" +
                          std::to_string(p + 1) + ")");
    }
    const HouseholderQr qr(design_matrix(x));
    if (const auto bad = qr.deficient_columns(); !bad.empty()) {
        std::string names;
        for (auto j : bad) names += (names.empty() ? "" : ", ") + design_column_name(x, j);
        throw SingularityError("least squares: rank-deficient design; dependent columns: " + names);
    }
    RegressionModel model;
    model.coefficients = qr.solve(z);
    model.transform = transform;
    model.column_names = x.column_names;

    const double zbar = stats::mean(z);
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = z[i] - model.linear(x.row(i));
        sse += e * e;
        sst += (z[i] - zbar) * (z[i] - zbar);
    }
    const double df_resid = static_cast<double>(n - p - 1);
    auto& fs = model.fit_stats;
    fs.n = n;
    fs.p = p;
    fs.residual_std = std::sqrt(sse / df_resid);
    const double scale = std::max(sst, std::numeric_limits<double>::min());
    fs.r2 = sst > 0.0 ? std::clamp(1.0 - sse / scale, 0.0, 1.0) : 1.0;
    const double ssr = std::max(sst - sse, 0.0);
    if (p == 0) {
        fs.f_statistic = 0.0;
        fs.p_value = 1.0;
    } else if (sse <= 1e-24 * std::max(1.0, sst)) {
        fs.f_statistic = ssr > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        fs.p_value = ssr > 0.0 ? 0.0 : 1.0;
    } else {
        fs.f_statistic = (ssr / static_cast<double>(p)) / (sse / df_resid);
        fs.p_value = std::clamp(stats::f_survival(fs.f_statistic, static_cast<double>(p), df_resid), 0.0, 1.0);
    }
    return model;
}

}  // namespace detail

/// Ordinary least squares with intercept via Householder QR.
inline RegressionModel fit_least_squares(const FeatureMatrix& x, std::span<const double> y) {
    return detail::fit_response(x, y, PowerTransform{});
}

/// Fits on forward-transformed responses.
inline RegressionModel fit_with_power(const FeatureMatrix& x, std::span<const double> y, PowerTransform transform) {
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = transform.forward(y[i]);
    return detail::fit_response(x, z, transform);
}

/// Fitted values, residuals, hat diagonals and internally studentized
/// residuals, all in the model's transformed scale.
inline Diagnostics diagnostics(const RegressionModel& model, const FeatureMatrix& x, std::span<const double> y) {
    if (x.cols() != model.column_names.size()) throw DomainError("diagnostics: column count mismatch");
    const std::size_t n = x.rows();
    Diagnostics d;
    const Matrix a = detail::design_matrix(x);
    const HouseholderQr qr(a);
    const double s = model.fit_stats.residual_std;
    for (std::size_t i = 0; i < n; ++i) {
        const double fitted = model.linear(x.row(i));
        const double resid = model.transform.forward(y[i]) - fitted;
        const auto z = qr.solve_rt(a.row(i));
        double h = 0.0;
        for (double v : z) h += v * v;
        h = std::clamp(h, 0.0, 1.0);
        d.fitted.push_back(fitted);
        d.residuals.push_back(resid);
        d.leverage.push_back(h);
        const double denom = s * std::sqrt(1.0 - h);
        if (1.0 - h < 1e-12 || !(denom > 0.0)) {
            d.studentized.emplace_back(std::nullopt);
        } else {
            d.studentized.emplace_back(resid / denom);
        }
    }
    return d;
}

/// Spread-level suggestion: 1 - slope of log|studentized residual| on
/// log(fitted). Rows with an undefined or zero studentized residual are
/// skipped.
inline double suggest_power(const RegressionModel& model, const Diagnostics& diag) {
    double scale = 0.0;
    for (double f : diag.fitted) scale = std::max(scale, std::abs(f));
    if (!(model.fit_stats.residual_std > 1e-10 * std::max(scale, 1.0))) {
        throw DomainError("suggest_power: residual spread is zero");
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < diag.fitted.size(); ++i) {
        if (!(diag.fitted[i] > 0.0)) {
            throw DomainError("suggest_power: fitted values must be positive; raise the offset");
        }
        const auto& r = diag.studentized[i];
        if (!r || *r == 0.0) continue;
        lx.push_back(std::log(diag.fitted[i]));
        ly.push_back(std::log(std::abs(*r)));
    }
    if (lx.size() < 3) throw DomainError("suggest_power: residual spread is zero");
    const double mx = stats::mean(lx);
    const double my = stats::mean(ly);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw DomainError("suggest_power: fitted values are constant");
    return 1.0 - sxy / sxx;
}

/// Two passes: an identity fit on y + offset yields the suggested power,
/// then the model is refit on (y + offset)^lambda.
inline RegressionModel fit_transformed(const FeatureMatrix& x, std::span<const double> y, double offset = 1.0) {
    std::vector<double> shifted(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        shifted[i] = y[i] + offset;
        if (!(shifted[i] > 0.0)) throw DomainError("fit_transformed: y + offset must be positive");
    }
    const auto first = fit_least_squares(x, shifted);
    const double lambda = suggest_power(first, diagnostics(first, x, shifted));
    return fit_with_power(x, y, PowerTransform{lambda, offset});
}

struct GradePrediction {
    double points = 0.0;
    double linear = 0.0;   // prediction in the transformed scale
    bool clamped = false;  // inverse undefined or outside [0, max]
};

/// Inverse-transformed prediction clamped to [0, max_points].
inline GradePrediction predict_grade(const RegressionModel& model, std::span<const double> row, double max_points) {
    if (row.size() != model.column_names.size()) throw PredictionError("regression: row has wrong number of features");
    GradePrediction out;
    out.linear = model.linear(row);
    const auto raw = model.transform.inverse(out.linear);
    if (!raw) {
        out.points = 0.0;
        out.clamped = true;
        return out;
    }
    out.points = std::clamp(*raw, 0.0, max_points);
    out.clamped = out.points != *raw;
    return out;
}

/// Predicts every row of `m`, matching columns by name.
inline std::vector<GradePrediction> predict_grades(const RegressionModel& model, const FeatureMatrix& m,
                                                   double max_points) {
    std::vector<std::size_t> map;
    for (const auto& name : model.column_names) {
        const auto j = m.column_index(name);
        if (!j) throw PredictionError("regression: missing feature " + name);
        map.push_back(*j);
    }
    std::vector<GradePrediction> out;
    std::vector<double> row(map.size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = 0; k < map.size(); ++k) row[k] = m.values(i, map[k]);
        out.push_back(predict_grade(model, row, max_points));
    }
    return out;
}

/// Normal Q-Q ordinates: (theoretical, sample) pairs over the defined
/// studentized residuals, using Blom-type plotting positions
/// (i - a) / (n + 1 - 2a) with a = 3/8 for n <= 10 and 1/2 otherwise.
inline std::vector<std::pair<double, double>> qq_ordinates(const Diagnostics& d) {
    std::vector<double> sample;
    for (const auto& r : d.studentized) {
        if (r) sample.push_back(*r);
    }
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    const double a = n <= 10 ? 3.0 / 8.0 : 0.5;
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i + 1) - a) / (static_cast<double>(n) + 1.0 - 2.0 * a);
        out.emplace_back(stats::normal_quantile(p), sample[i]);
    }
    return out;
}

struct DiagnosticTables {
    std::string residual_vs_fitted;
    std::string normal_qq;
    std::string residual_vs_leverage;
};

inline DiagnosticTables diagnostic_tables(const Diagnostics& d) {
    std::ostringstream rf, qq, lv;
    rf << "fitted,residual\n";
    for (std::size_t i = 0; i < d.fitted.size(); ++i) {
        rf << text::format_double(d.fitted[i]) << ',' << text::format_double(d.residuals[i]) << '\n';
    }
    qq << "theoretical_quantile,sample_quantile\n";
    for (const auto& [t, s] : qq_ordinates(d)) qq << text::format_double(t) << ',' << text::format_double(s) << '\n';
    lv << "leverage,studentized\n";
    for (std::size_t i = 0; i < d.leverage.size(); ++i) {
        lv << text::format_double(d.leverage[i]) << ','
           << (d.studentized[i] ? text::format_double(*d.studentized[i]) : std::string("NA")) << '\n';
    }
    return {rf.str(), qq.str(), lv.str()};
}

inline nlohmann::json to_json(const RegressionModel& m) {
    const auto& s = m.fit_stats;
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v > 0 ? "inf" : "-inf");
    };
    return {{"model", "linear_regression"},
            {"columns", m.column_names},
            {"coefficients", m.coefficients},
            {"lambda", m.transform.lambda},
            {"offset", m.transform.offset},
            {"fit_stats",
             {{"r2", s.r2},
              {"residual_std", s.residual_std},
              {"f_statistic", num(s.f_statistic)},
              {"p_value", s.p_value},
              {"n", s.n},
              {"p", s.p}}}};
}

inline RegressionModel regression_from_json(const nlohmann::json& j) {
    RegressionModel m;
    try {
        if (j.at("model").get<std::string>() != "linear_regression") {
            throw ConfigError("not a linear_regression model document");
        }
        m.column_names = j.at("columns").get<std::vector<std::string>>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        m.transform.lambda = j.at("lambda").get<double>();
        m.transform.offset = j.at("offset").get<double>();
        const auto& s = j.at("fit_stats");
        m.fit_stats.r2 = s.at("r2").get<double>();
        m.fit_stats.residual_std = s.at("residual_std").get<double>();
        const auto& f = s.at("f_statistic");
        m.fit_stats.f_statistic = f.is_string() ? (f.get<std::string>() == "inf" ? INFINITY : -INFINITY)
                                  : f.is_null() ? NAN
                                                : f.get<double>();
        m.fit_stats.p_value = s.at("p_value").get<double>();
        m.fit_stats.n = s.at("n").get<std::size_t>();
        m.fit_stats.p = s.at("p").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed regression model: ") + e.what());
    }
    if (m.coefficients.size() != m.column_names.size() + 1) {
        throw ConfigError("regression model: coefficient count must be columns + 1");
    }
    return m;
}

}  // namespace subperf
