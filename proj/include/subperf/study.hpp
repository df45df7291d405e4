#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subperf/dataset.hpp"
#include "subperf/eval.hpp"
#include "subperf/features.hpp"
#include "subperf/labeling.hpp"
#include "subperf/regress.hpp"
#include "subperf/smote.hpp"
#include "subperf/stats.hpp"
#include "subperf/text.hpp"
#include "subperf/tree.hpp"

namespace subperf {

struct ExperimentSpec {
    Exam exam = Exam::midterm;
    FeatureFamily family = FeatureFamily::sti;
    ModelKind model = ModelKind::tree;
    SplitSpec split;
    std::optional<SmoteConfig> smote = SmoteConfig{};  // tree experiments only
    TreeConfig tree;
    double sti_threshold = 0.75;
    double grade_offset = 1.0;  // added before the power transform

    /// Row label used in the comparison tables.
    std::string name() const {
        if (model == ModelKind::regression) return "STI-regression";
        if (family == FeatureFamily::sti) return "STI-tree";
        return std::string(short_label(family));
    }

    void validate() const {
        if (model == ModelKind::regression && family != FeatureFamily::sti) {
            throw ConfigError("regression experiments use the sti feature family only");
        }
        split.validate();
        if (smote) smote->validate();
        tree.validate();
        if (!(grade_offset >= 0.0)) throw ConfigError("grade offset must be non-negative");
    }
};

struct ExperimentResult {
    ExperimentSpec spec;
    ConfusionMatrix confusion;
    ClassMetrics pp;
    std::vector<std::string> train_ids;  // original rows that reached fitting
    std::vector<std::string> test_ids;
    std::vector<Category> actual;
    std::vector<Category> predicted;
    std::size_t synthetic_rows = 0;
    std::optional<TreeModel> tree;
    std::optional<RegressionModel> regression;
    std::optional<RegressionReport> report;
    std::vector<double> actual_grades;     // test rows, regression only
    std::vector<double> predicted_grades;  // clamped points, regression only
    std::vector<std::string> warnings;

    std::vector<std::string> predicted_ids(Category c) const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < test_ids.size(); ++i) {
            if (predicted[i] == c) out.push_back(test_ids[i]);
        }
        return out;
    }
};

inline Timestamp exam_date(const CourseTimeline& tl, Exam exam) {
    return exam == Exam::midterm ? tl.midterm_date : tl.final_date;
}

/// Tasks due on or before the exam, in deadline order.
inline std::vector<std::string> exam_scope(const Dataset& ds, Exam exam) {
    std::vector<std::string> ids;
    for (const auto& t : tasks_before(ds, exam_date(ds.timeline(), exam))) ids.push_back(t.task_id);
    if (ids.empty()) throw DomainError("no tasks are due before the " + std::string(to_string(exam)));
    return ids;
}

namespace detail {

inline FeatureMatrix experiment_matrix(const Dataset& ds, const ExperimentSpec& spec) {
    FeatureConfig fc;
    fc.sti_threshold = spec.sti_threshold;
    fc.task_scope = exam_scope(ds, spec.exam);
    return with_categories(build_feature_matrix(ds, spec.family, fc, spec.exam));
}

inline std::vector<std::string> original_ids(const FeatureMatrix& m) {
    std::vector<std::string> out;
    for (const auto& id : m.student_ids) {
        if (!id.starts_with(kSyntheticPrefix)) out.push_back(id);
    }
    return out;
}

}  // namespace detail

/// Tree experiment: features over the exam's scope, stratified split, SMOTE
/// on the training side only, evaluation on the untouched test side.
inline ExperimentResult run_classification(const Dataset& ds, const ExperimentSpec& spec) {
    spec.validate();
    if (spec.model != ModelKind::tree) throw ConfigError("run_classification expects a tree experiment");
    ExperimentResult out;
    out.spec = spec;
    const auto m = detail::experiment_matrix(ds, spec);
    auto [train, test] = split(m, spec.split);
    const std::size_t original = train.rows();
    if (spec.smote) train = oversample(train, *spec.smote, &out.warnings);
    out.synthetic_rows = train.rows() - original;
    out.train_ids = detail::original_ids(train);
    out.test_ids = test.student_ids;

    out.tree = train_tree(train, spec.tree);
    out.actual = *test.classes;
    out.predicted = out.tree->predict(test);
    out.confusion = confusion(out.actual, out.predicted);
    out.pp = class_metrics(out.confusion, Category::PP);
    return out;
}

/// STI regression with a suggested power transform; predicted grades are
/// clamped to the exam range and then categorized with the 80/50 rule.
inline ExperimentResult run_sti_regression(const Dataset& ds, const ExperimentSpec& spec) {
    spec.validate();
    if (spec.family != FeatureFamily::sti) throw ConfigError("run_sti_regression expects the sti family");
    ExperimentResult out;
    out.spec = spec;
    out.spec.model = ModelKind::regression;
    out.spec.smote.reset();
    const auto m = detail::experiment_matrix(ds, spec);
    auto [train, test] = split(m, spec.split);

    // A column constant over the training rows is collinear with the intercept.
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < train.cols(); ++j) {
        bool constant = true;
        for (std::size_t i = 1; i < train.rows() && constant; ++i) constant = train.values(i, j) == train.values(0, j);
        if (constant) {
            out.warnings.push_back("regression: dropped column " + train.column_names[j] +
                                   " (constant over the training rows)");
        } else {
            keep.push_back(j);
        }
    }
    if (keep.size() != train.cols()) train = train.select_columns(keep);
    out.train_ids = train.student_ids;
    out.test_ids = test.student_ids;

    out.regression = fit_transformed(train, *train.grades, spec.grade_offset);
    const double max_points = spec.exam == Exam::midterm ? ds.timeline().midterm_max : ds.timeline().final_max;
    for (const auto& p : predict_grades(*out.regression, test, max_points)) out.predicted_grades.push_back(p.points);
    out.actual_grades = *test.grades;
    out.report = regression_report(out.actual_grades, out.predicted_grades);
    out.actual = *test.classes;
    out.predicted = categorize(out.predicted_grades);
    out.confusion = confusion(out.actual, out.predicted);
    out.pp = class_metrics(out.confusion, Category::PP);
    return out;
}

inline ExperimentResult run_experiment(const Dataset& ds, const ExperimentSpec& spec) {
    return spec.model == ModelKind::regression ? run_sti_regression(ds, spec) : run_classification(ds, spec);
}

// ---------------------------------------------------------------------------
// Per-assignment correlation

struct CorrelationRow {
    std::string label;  // assignment id, or "midterm"
    std::size_t n_tasks = 0;
    bool is_midterm = false;
    std::optional<double> correlation;
    double mae = 0.0;
    double rmse = 0.0;
};

/// One untransformed regression per assignment (its in-scope STI columns),
/// cross-validated with k folds. For the final exam the midterm grade is
/// added as a one-column predictor between the pre- and post-midterm
/// assignments.
inline std::vector<CorrelationRow> per_assignment_correlation(const Dataset& ds, Exam exam, std::size_t k = 10,
                                                              std::uint64_t seed = 0,
                                                              std::vector<std::string>* warnings = nullptr,
                                                              double sti_threshold = 0.75) {
    const auto cutoff = exam_date(ds.timeline(), exam);
    struct Group {
        std::string id;
        Timestamp first_deadline;
        std::vector<std::string> tasks;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> where;
    std::vector<TaskSpec> ordered(ds.tasks().begin(), ds.tasks().end());
    std::sort(ordered.begin(), ordered.end(), [](const TaskSpec& a, const TaskSpec& b) {
        return std::tie(a.deadline, a.task_id) < std::tie(b.deadline, b.task_id);
    });
    for (const auto& t : ordered) {
        auto [it, fresh] = where.try_emplace(t.assignment_id, groups.size());
        if (fresh) groups.push_back({t.assignment_id, t.deadline, {}});
        if (t.deadline <= cutoff) groups[it->second].tasks.push_back(t.task_id);
    }

    auto cv_row = [&](const FeatureMatrix& m, std::string label, std::size_t n_tasks, bool is_midterm) {
        const auto cv = cross_validate_regression(m, k, seed);
        return CorrelationRow{std::move(label), n_tasks, is_midterm, cv.correlation, cv.mae, cv.rmse};
    };

    std::vector<CorrelationRow> rows;
    bool midterm_placed = exam != Exam::final;
    auto place_midterm = [&] {
        FeatureMatrix m;
        m.student_ids = ds.students();
        m.column_names = {"midterm"};
        m.values = Matrix(m.student_ids.size(), 1);
        const auto mid = exam_grades(ds, Exam::midterm);
        for (std::size_t i = 0; i < mid.size(); ++i) m.values(i, 0) = mid[i];
        m.grades = exam_grades(ds, exam);
        rows.push_back(cv_row(m, "midterm", 0, true));
        midterm_placed = true;
    };

    for (const auto& g : groups) {
        if (g.first_deadline > cutoff) continue;  // released after this exam
        if (!midterm_placed && g.first_deadline > ds.timeline().midterm_date) place_midterm();
        if (g.tasks.empty()) {
            if (warnings) warnings->push_back("correlation: assignment " + g.id + " has no tasks in scope; skipped");
            continue;
        }
        FeatureConfig fc;
        fc.sti_threshold = sti_threshold;
        fc.task_scope = g.tasks;
        rows.push_back(cv_row(build_feature_matrix(ds, FeatureFamily::sti, fc, exam), g.id, g.tasks.size(), false));
    }
    if (!midterm_placed) place_midterm();
    return rows;
}

/// Index of the row with the largest defined correlation.
inline std::optional<std::size_t> strongest_row(const std::vector<CorrelationRow>& rows) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].correlation && (!best || *rows[i].correlation > *rows[*best].correlation)) best = i;
    }
    return best;
}

/// Columns are assignments (and the midterm); rows the averaged statistics.
inline std::string render_correlation_table(const std::vector<CorrelationRow>& rows, std::string_view caption = {}) {
    std::ostringstream os;
    if (!caption.empty()) os << caption << '\n';
    auto cell = [](std::string s) {
        if (s.size() < 10) s.append(10 - s.size(), ' ');
        return s;
    };
    os << cell("");
    for (const auto& r : rows) os << cell(r.label);
    os << "\n" << cell("sub tasks");
    for (const auto& r : rows) os << cell(r.is_midterm ? "-" : std::to_string(r.n_tasks));
    os << "\n" << cell("corr");
    for (const auto& r : rows) os << cell(text::format_fixed(r.correlation));
    os << "\n" << cell("MAE");
    for (const auto& r : rows) os << cell(text::format_fixed(r.mae));
    os << "\n" << cell("RMSE");
    for (const auto& r : rows) os << cell(text::format_fixed(r.rmse));
    os << '\n';
    return os.str();
}

inline nlohmann::json to_json(const CorrelationRow& r) {
    nlohmann::json j{{"label", r.label}, {"correlation", opt_json(r.correlation)}, {"mae", r.mae}, {"rmse", r.rmse}};
    j["n_tasks"] = r.is_midterm ? nlohmann::json(nullptr) : nlohmann::json(r.n_tasks);
    j["is_midterm"] = r.is_midterm;
    return j;
}

// ---------------------------------------------------------------------------
// Boxplot export

struct PredictedSet {
    std::string model;
    std::vector<std::string> student_ids;
};

/// `model,student_id,actual_grade` rows, then per model the summary rows
/// `__count__`, `__min__`, `__q1__`, `__median__`, `__q3__`, `__max__`
/// (Tukey hinges). A model without predictions only gets `__count__,0`.
inline std::string export_boxplot_data(const Dataset& ds, Exam exam, const std::vector<PredictedSet>& sets) {
    if (sets.empty()) throw ConfigError("boxplot export needs at least one model");
    std::ostringstream os;
    os << "model,student_id,actual_grade\n";
    std::vector<std::vector<double>> values(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (const auto& id : sets[s].student_ids) {
            const auto g = ds.grade(id).of(exam);
            if (!g) throw DomainError("student " + id + " has no " + std::string(to_string(exam)) + " grade");
            values[s].push_back(*g);
            os << sets[s].model << ',' << id << ',' << text::format_double(*g) << '\n';
        }
    }
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& name = sets[s].model;
        os << name << ",__count__," << values[s].size() << '\n';
        if (values[s].empty()) continue;
        const auto f = stats::five_number_summary(values[s]);
        os << name << ",__min__," << text::format_double(f.min) << '\n'
           << name << ",__q1__," << text::format_double(f.lower_hinge) << '\n'
           << name << ",__median__," << text::format_double(f.median) << '\n'
           << name << ",__q3__," << text::format_double(f.upper_hinge) << '\n'
           << name << ",__max__," << text::format_double(f.max) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json j{{"name", s.name()},
                     {"exam", std::string(to_string(s.exam))},
                     {"feature_family", std::string(to_string(s.family))},
                     {"model", s.model == ModelKind::tree ? "c45" : "regression"},
                     {"split", {{"train_fraction", s.split.train_fraction},
                                {"seed", s.split.seed},
                                {"stratified", s.split.stratified}}},
                     {"sti_threshold", s.sti_threshold}};
    if (s.model == ModelKind::tree) {
        j["tree"] = {{"min_leaf", s.tree.min_leaf}, {"confidence", s.tree.pruning_confidence}, {"pruning", s.tree.pruning}};
        j["smote"] = s.smote ? nlohmann::json{{"k", s.smote->k_neighbors},
                                              {"percentage", s.smote->percentage},
                                              {"seed", s.smote->seed},
                                              {"class", std::string(to_string(s.smote->target_class))}}
                             : nlohmann::json(nullptr);
    } else {
        j["grade_offset"] = s.grade_offset;
    }
    return j;
}

inline nlohmann::json to_json(const ExperimentResult& r) {
    nlohmann::json j{{"spec", to_json(r.spec)},
                     {"confusion", to_json(r.confusion)},
                     {"pp_metrics", to_json(r.pp)},
                     {"train_rows", r.train_ids.size()},
                     {"synthetic_rows", r.synthetic_rows},
                     {"test_ids", r.test_ids},
                     {"predicted_pp", r.predicted_ids(Category::PP)},
                     {"warnings", r.warnings}};
    if (r.tree) {
        j["tree"] = {{"leaves", r.tree->leaf_count()}, {"depth", r.tree->depth()}};
    }
    if (r.regression) {
        j["regression"] = to_json(*r.regression);
        j["error_statistics"] = to_json(*r.report);
    }
    return j;
}

inline std::string render(const ExperimentResult& r) {
    std::ostringstream os;
    os << render_confusion(r.confusion, "Confusion matrix: " + r.spec.name() + " (" +
                                            std::string(to_string(r.spec.exam)) + ")");
    const MetricsRow row{r.spec.name(), r.pp};
    os << '\n' << render_metrics_table(std::span<const MetricsRow>(&row, 1), "PP class");
    if (r.report) {
        os << "\nerror mean " << text::format_fixed(r.report->mean_error) << ", error std "
           << text::format_fixed(r.report->std_error) << ", correlation " << text::format_fixed(r.report->correlation)
           << "\n";
        const auto& fs = r.regression->fit_stats;
        std::ostringstream p;
        p << fs.p_value;
        os << "lambda " << text::format_fixed(r.regression->transform.lambda) << ", R^2 " << text::format_fixed(fs.r2)
           << ", F " << text::format_fixed(fs.f_statistic) << ", p-value " << p.str() << "\n";
    }
    for (const auto& w : r.warnings) os << "warning: " << w << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Whole study

struct StudyConfig {
    Exam exam = Exam::midterm;
    bool all_features = true;  // PR, TO, NOS as well as the two STI models
    std::uint64_t seed = 1;
    std::size_t folds = 10;
    double train_fraction = 0.8;
    bool stratified = true;
    std::optional<SmoteConfig> smote = SmoteConfig{};
    std::optional<std::uint64_t> smote_seed;  // defaults to seed
    TreeConfig tree;
    double sti_threshold = 0.75;
    bool parallel = true;

    /// Specs in table order; every experiment shares the split seed.
    std::vector<ExperimentSpec> experiments() const {
        std::vector<ExperimentSpec> out;
        auto make = [&](FeatureFamily f, ModelKind k) {
            ExperimentSpec s;
            s.exam = exam;
            s.family = f;
            s.model = k;
            s.split = {train_fraction, seed, stratified};
            s.smote = smote;
            if (s.smote) s.smote->seed = smote_seed.value_or(seed);
            s.tree = tree;
            s.sti_threshold = sti_threshold;
            if (k == ModelKind::regression) s.smote.reset();
            out.push_back(s);
        };
        if (all_features) {
            make(FeatureFamily::passing_rate, ModelKind::tree);
            make(FeatureFamily::testcase_outcomes, ModelKind::tree);
            make(FeatureFamily::submission_count, ModelKind::tree);
        }
        make(FeatureFamily::sti, ModelKind::tree);
        make(FeatureFamily::sti, ModelKind::regression);
        return out;
    }
};

struct StudyResult {
    StudyConfig config;
    std::vector<ExperimentResult> experiments;
    std::vector<CorrelationRow> correlation;
    std::vector<std::string> warnings;
    std::string boxplot_csv;

    const ExperimentResult* find(std::string_view name) const {
        for (const auto& e : experiments) {
            if (e.spec.name() == name) return &e;
        }
        return nullptr;
    }
};

inline StudyResult run_study(const Dataset& ds, const StudyConfig& config) {
    StudyResult out;
    out.config = config;
    const auto specs = config.experiments();
    if (config.parallel) {
        std::vector<std::future<ExperimentResult>> jobs;
        for (const auto& s : specs) {
            jobs.push_back(std::async(std::launch::async, [&ds, s] { return run_experiment(ds, s); }));
        }
        for (auto& j : jobs) out.experiments.push_back(j.get());
    } else {
        for (const auto& s : specs) out.experiments.push_back(run_experiment(ds, s));
    }
    out.correlation = per_assignment_correlation(ds, config.exam, config.folds, config.seed, &out.warnings,
                                                 config.sti_threshold);
    std::vector<PredictedSet> sets;
    for (const auto& e : out.experiments) sets.push_back({e.spec.name(), e.predicted_ids(Category::PP)});
    out.boxplot_csv = export_boxplot_data(ds, config.exam, sets);
    return out;
}

inline nlohmann::json to_json(const StudyResult& s) {
    nlohmann::json exps = nlohmann::json::array();
    for (const auto& e : s.experiments) exps.push_back(to_json(e));
    nlohmann::json corr = nlohmann::json::array();
    for (const auto& r : s.correlation) corr.push_back(to_json(r));
    return {{"exam", std::string(to_string(s.config.exam))},
            {"seed", s.config.seed},
            {"folds", s.config.folds},
            {"experiments", exps},
            {"per_assignment_correlation", corr},
            {"warnings", s.warnings}};
}

inline std::string render(const StudyResult& s) {
    std::ostringstream os;
    const std::string exam(to_string(s.config.exam));
    for (const auto& e : s.experiments) os << render_confusion(e.confusion, e.spec.name() + " (" + exam + ")") << '\n';
    std::vector<MetricsRow> rows;
    for (const auto& e : s.experiments) rows.push_back({e.spec.name(), e.pp});
    os << render_metrics_table(rows, "Prediction of the PP class, " + exam) << '\n';
    if (const auto* reg = s.find("STI-regression"); reg && reg->report) {
        os << "STI regression error: mean " << text::format_fixed(reg->report->mean_error) << ", std "
           << text::format_fixed(reg->report->std_error) << "\n\n";
    }
    os << render_correlation_table(s.correlation, "Per-assignment correlation, " + exam);
    for (const auto& w : s.warnings) os << "warning: " << w << '\n';
    for (const auto& e : s.experiments) {
        for (const auto& w : e.warnings) os << "warning (" << e.spec.name() << "): " << w << '\n';
    }
    return os.str();
}

}  // namespace subperf
