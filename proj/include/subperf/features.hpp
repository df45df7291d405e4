#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "subperf/category.hpp"
#include "subperf/dataset.hpp"
#include "subperf/errors.hpp"
#include "subperf/linalg.hpp"
#include "subperf/text.hpp"

namespace subperf {

/// Per-student feature rows for one feature family, with an optional target.
///
/// The target is numeric (exam points), categorical, or both; SMOTE and the
/// tree read the categorical column, regression reads the numeric one.
struct FeatureMatrix {
    std::vector<std::string> student_ids;
    std::vector<std::string> column_names;
    Matrix values;
    std::optional<std::vector<double>> grades;
    std::optional<std::vector<Category>> classes;

    std::size_t rows() const noexcept { return student_ids.size(); }
    std::size_t cols() const noexcept { return column_names.size(); }
    std::span<const double> row(std::size_t i) const { return values.row(i); }
    bool has_target() const noexcept { return grades.has_value() || classes.has_value(); }

    std::optional<std::size_t> column_index(std::string_view name) const {
        const auto it = std::find(column_names.begin(), column_names.end(), name);
        if (it == column_names.end()) return std::nullopt;
        return static_cast<std::size_t>(it - column_names.begin());
    }

    /// Rows at `indices`, in that order.
    FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
        FeatureMatrix out;
        out.column_names = column_names;
        out.values = Matrix(0, cols());
        if (grades) out.grades.emplace();
        if (classes) out.classes.emplace();
        for (std::size_t i : indices) {
            out.student_ids.push_back(student_ids.at(i));
            out.values.append_row(row(i));
            if (grades) out.grades->push_back((*grades)[i]);
            if (classes) out.classes->push_back((*classes)[i]);
        }
        return out;
    }

    /// Columns at `indices`, in that order; targets are kept.
    FeatureMatrix select_columns(std::span<const std::size_t> indices) const {
        FeatureMatrix out;
        out.student_ids = student_ids;
        out.grades = grades;
        out.classes = classes;
        for (std::size_t j : indices) out.column_names.push_back(column_names.at(j));
        out.values = Matrix(rows(), indices.size());
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t k = 0; k < indices.size(); ++k) out.values(i, k) = values(i, indices[k]);
        }
        return out;
    }

    bool operator==(const FeatureMatrix&) const = default;
};

enum class FeatureFamily { passing_rate, testcase_outcomes, submission_count, sti };

constexpr std::string_view to_string(FeatureFamily f) noexcept {
    switch (f) {
        case FeatureFamily::passing_rate: return "passing_rate";
        case FeatureFamily::testcase_outcomes: return "testcase_outcomes";
        case FeatureFamily::submission_count: return "submission_count";
        case FeatureFamily::sti: return "sti";
    }
    return "?";
}

/// Short labels used in comparison tables.
constexpr std::string_view short_label(FeatureFamily f) noexcept {
    switch (f) {
        case FeatureFamily::passing_rate: return "PR";
        case FeatureFamily::testcase_outcomes: return "TO";
        case FeatureFamily::submission_count: return "NOS";
        case FeatureFamily::sti: return "STI";
    }
    return "?";
}

inline std::optional<FeatureFamily> parse_feature_family(std::string_view s) {
    if (s == "passing_rate" || s == "pr" || s == "PR") return FeatureFamily::passing_rate;
    if (s == "testcase_outcomes" || s == "to" || s == "TO") return FeatureFamily::testcase_outcomes;
    if (s == "submission_count" || s == "nos" || s == "NOS") return FeatureFamily::submission_count;
    if (s == "sti" || s == "STI") return FeatureFamily::sti;
    return std::nullopt;
}

struct FeatureConfig {
    double sti_threshold = 0.75;
    std::vector<std::string> task_scope;

    void validate() const {
        if (task_scope.empty()) throw ConfigError("feature task scope is empty");
        if (!(sti_threshold > 0.0 && sti_threshold <= 1.0)) throw ConfigError("sti threshold must lie in (0, 1]");
    }
};

/// m/n of the best submission; 0 without submissions.
inline double passing_rate(const Dataset& ds, std::string_view student_id, std::string_view task_id) {
    const auto& task = ds.task(task_id);
    const auto* best = best_submission(ds, student_id, task_id);
    if (!best) return 0.0;
    return static_cast<double>(best->passed_count()) / static_cast<double>(task.testcase_count());
}

/// 0/1 per testcase of the best submission; all zeros without submissions.
inline std::vector<double> testcase_outcomes(const Dataset& ds, std::string_view student_id,
                                             std::string_view task_id) {
    const auto& task = ds.task(task_id);
    std::vector<double> out(task.testcase_count(), 0.0);
    if (const auto* best = best_submission(ds, student_id, task_id)) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = best->outcomes[i] == Outcome::passed ? 1.0 : 0.0;
    }
    return out;
}

/// All submissions, late ones included.
inline std::size_t submission_count(const Dataset& ds, std::string_view student_id, std::string_view task_id) {
    return ds.submissions_for(student_id, task_id).size();
}

/// Hours between the earliest submission passing at least `threshold` of the
/// testcases and the deadline. Zero when that submission is late or absent.
inline double submission_time_interval(const Dataset& ds, std::string_view student_id, std::string_view task_id,
                                       double threshold = 0.75) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("sti threshold must lie in (0, 1]");
    const auto& task = ds.task(task_id);
    const double n = static_cast<double>(task.testcase_count());
    for (const auto* s : ds.submissions_for(student_id, task_id)) {  // oldest first
        if (static_cast<double>(s->passed_count()) >= threshold * n - 1e-9) {
            return std::max(0.0, hours_between(s->submitted_at, task.deadline));
        }
    }
    return 0.0;
}

/// Numeric exam grades of the retained students, in students() order.
inline std::vector<double> exam_grades(const Dataset& ds, Exam exam) {
    std::vector<double> out;
    out.reserve(ds.students().size());
    for (const auto& g : ds.grades()) out.push_back(*g.of(exam));
    return out;
}

/// One row per retained student (sorted ids); one column per task, or per
/// (task, testcase) for the outcome family.
inline FeatureMatrix build_feature_matrix(const Dataset& ds, FeatureFamily family, const FeatureConfig& config,
                                          std::optional<Exam> target = std::nullopt) {
    config.validate();
    std::vector<const TaskSpec*> scope;
    for (const auto& id : config.task_scope) scope.push_back(&ds.task(id));

    FeatureMatrix m;
    m.student_ids = ds.students();
    for (const auto* t : scope) {
        if (family == FeatureFamily::testcase_outcomes) {
            for (const auto& tc : t->testcase_ids) m.column_names.push_back(t->task_id + ":" + tc);
        } else {
            m.column_names.push_back(t->task_id);
        }
    }
    m.values = Matrix(m.student_ids.size(), m.column_names.size());
    for (std::size_t i = 0; i < m.student_ids.size(); ++i) {
        const auto& sid = m.student_ids[i];
        std::size_t col = 0;
        for (const auto* t : scope) {
            switch (family) {
                case FeatureFamily::passing_rate: m.values(i, col++) = passing_rate(ds, sid, t->task_id); break;
                case FeatureFamily::testcase_outcomes:
                    for (double v : testcase_outcomes(ds, sid, t->task_id)) m.values(i, col++) = v;
                    break;
                case FeatureFamily::submission_count:
                    m.values(i, col++) = static_cast<double>(submission_count(ds, sid, t->task_id));
                    break;
                case FeatureFamily::sti:
                    m.values(i, col++) = submission_time_interval(ds, sid, t->task_id, config.sti_threshold);
                    break;
            }
        }
    }
    if (target) m.grades = exam_grades(ds, *target);
    return m;
}

/// `student_id,<columns>[,target]`. Categorical targets are written when
/// present, otherwise numeric grades.
inline std::string to_csv(const FeatureMatrix& m) {
    std::ostringstream os;
    os << "student_id";
    for (const auto& c : m.column_names) os << ',' << c;
    const bool with_target = m.has_target();
    if (with_target) os << ",target";
    os << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << m.student_ids[i];
        for (double v : m.row(i)) os << ',' << text::format_double(v);
        if (with_target) {
            os << ',';
            if (m.classes) {
                os << to_string((*m.classes)[i]);
            } else {
                os << text::format_double((*m.grades)[i]);
            }
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace subperf
