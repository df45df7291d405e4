#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subperf/subperf.hpp"

namespace subperf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2 };

// Thrown for option combinations CLI11 cannot express; reported like a parse error.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataOptions {
    std::string dir;
    std::string tasks;
    std::string submissions;
    std::string grades;
    std::string timeline;
    std::string midterm_date;
    std::string final_date;
    double midterm_max = 110.0;
    double final_max = 120.0;

    void attach(CLI::App* app) {
        app->add_option("--data", dir, "Directory holding tasks.csv, submissions.csv, grades.csv, timeline.cfg");
        app->add_option("--tasks", tasks, "Task table (CSV)");
        app->add_option("--submissions", submissions, "Submission log (CSV)");
        app->add_option("--grades", grades, "Exam grades (CSV)");
        app->add_option("--timeline", timeline, "Timeline file (key=value)");
        app->add_option("--midterm-date", midterm_date, "Midterm date, ISO-8601 UTC");
        app->add_option("--final-date", final_date, "Final exam date, ISO-8601 UTC");
        app->add_option("--midterm-max", midterm_max, "Maximum midterm points");
        app->add_option("--final-max", final_max, "Maximum final exam points");
    }

    bool given() const { return !dir.empty() || !tasks.empty() || !submissions.empty() || !grades.empty(); }

    fs::path resolve(const std::string& explicit_path, const char* file) const {
        if (!explicit_path.empty()) return explicit_path;
        if (!dir.empty()) return fs::path(dir) / file;
        return {};
    }

    CourseTimeline course_timeline() const {
        if (!timeline.empty()) return parse_timeline_config(timeline);
        if (midterm_date.empty() && final_date.empty() && !dir.empty() && fs::exists(fs::path(dir) / "timeline.cfg")) {
            return parse_timeline_config(fs::path(dir) / "timeline.cfg");
        }
        if (midterm_date.empty() || final_date.empty()) {
            throw UsageError("a timeline is required: --timeline FILE or --midterm-date and --final-date");
        }
        CourseTimeline tl;
        const auto m = parse_timestamp(midterm_date);
        const auto f = parse_timestamp(final_date);
        if (!m || !f) throw UsageError("exam dates must be ISO-8601 UTC timestamps");
        tl.midterm_date = *m;
        tl.final_date = *f;
        tl.midterm_max = midterm_max;
        tl.final_max = final_max;
        return tl;
    }

    Dataset load(LoadReport* report = nullptr) const {
        const auto t = resolve(tasks, "tasks.csv");
        const auto s = resolve(submissions, "submissions.csv");
        const auto g = resolve(grades, "grades.csv");
        if (t.empty()) throw UsageError("--tasks (or --data) is required");
        if (s.empty()) throw UsageError("--submissions (or --data) is required");
        const auto tl = course_timeline();
        // Grades define the roster, so a missing grades file is a data problem.
        if (g.empty()) throw ConfigError("grades are required (--grades or --data)");
        for (const auto& p : {t, s, g}) {
            if (!fs::exists(p)) throw ConfigError("input file not found: " + p.string());
        }
        return load_dataset(t, s, g, tl, report);
    }

    json to_json() const {
        return {{"data", dir},
                {"tasks", tasks},
                {"submissions", submissions},
                {"grades", grades},
                {"timeline", timeline},
                {"midterm_date", midterm_date},
                {"final_date", final_date},
                {"midterm_max", midterm_max},
                {"final_max", final_max}};
    }
};

struct SplitOptions {
    double train_fraction = 0.8;
    std::uint64_t seed = 1;
    bool no_stratify = false;

    void attach(CLI::App* app) {
        app->add_option("--train-fraction", train_fraction, "Training share of the split")->check(CLI::Range(0.0, 1.0));
        app->add_option("--seed", seed, "Seed for the split (and SMOTE unless --smote-seed)");
        app->add_flag("--no-stratify", no_stratify, "Plain random split");
    }
    SplitSpec spec() const { return {train_fraction, seed, !no_stratify}; }
};

struct SmoteOptions {
    std::size_t k = 5;
    std::size_t percentage = 100;
    std::optional<std::uint64_t> seed;
    bool off = false;

    void attach(CLI::App* app) {
        app->add_option("--smote-k", k, "SMOTE nearest neighbours");
        app->add_option("--smote-percentage", percentage, "SMOTE oversampling percentage (multiple of 100)");
        app->add_option("--smote-seed", seed, "SMOTE seed (defaults to --seed)");
        app->add_flag("--smote-off", off, "Train without rebalancing");
    }
    std::optional<SmoteConfig> config(std::uint64_t fallback_seed) const {
        if (off) return std::nullopt;
        SmoteConfig c;
        c.k_neighbors = k;
        c.percentage = percentage;
        c.seed = seed.value_or(fallback_seed);
        return c;
    }
};

struct TreeOptions {
    std::size_t min_leaf = 2;
    double confidence = 0.25;
    bool no_prune = false;

    void attach(CLI::App* app) {
        app->add_option("--min-leaf", min_leaf, "Minimum rows per branch");
        app->add_option("--confidence", confidence, "Pruning confidence factor");
        app->add_flag("--no-prune", no_prune, "Keep the unpruned tree");
    }
    TreeConfig config() const { return {min_leaf, confidence, !no_prune}; }
};

inline FeatureFamily family_of(const std::string& s) {
    const auto f = parse_feature_family(s);
    if (!f) throw UsageError("unknown feature family: " + s);
    return *f;
}

inline Exam exam_of(const std::string& s) {
    const auto e = parse_exam(s);
    if (!e) throw UsageError("unknown exam: " + s);
    return *e;
}

inline const std::vector<std::string> kFamilies{"pr", "to", "nos", "sti", "passing_rate", "testcase_outcomes",
                                                "submission_count"};

inline void write_text(const fs::path& dir, const std::string& name, const std::string& content,
                       std::vector<std::string>& written) {
    text::write_file_atomic(dir / name, content);
    written.push_back(name);
}

/// Written last; everything needed to replay the run, without output paths.
inline void write_manifest(const fs::path& dir, const std::string& command, json options,
                           std::vector<std::string> outputs) {
    outputs.push_back("run_manifest.json");
    const json m{{"tool", "subperf"}, {"version", SUBPERF_VERSION}, {"command", command},
                 {"options", std::move(options)}, {"outputs", std::move(outputs)}};
    text::write_file_atomic(dir / "run_manifest.json", m.dump(2) + "\n");
}

inline double exam_max(const CourseTimeline& tl, Exam e) { return e == Exam::midterm ? tl.midterm_max : tl.final_max; }

// ---------------------------------------------------------------------------

struct SynthCommand {
    std::size_t students = 428;
    std::uint64_t seed = 1;
    std::optional<double> noise;
    std::optional<double> jitter;
    std::string out;

    void attach(CLI::App* app) {
        app->add_option("--students", students, "Cohort size");
        app->add_option("--seed", seed, "Generator seed");
        app->add_option("--noise", noise, "Grade noise sd (points)");
        app->add_option("--jitter", jitter, "Per-task STI sd (hours)");
        app->add_option("--out", out, "Output directory")->required();
    }

    int run(std::ostream& os) const {
        CohortSpec spec;
        spec.n_students = students;
        spec.seed = seed;
        if (noise) spec.noise = *noise;
        if (jitter) spec.sti_jitter = *jitter;
        const auto cohort = generate_cohort(spec);
        write_cohort(cohort, out);
        write_manifest(out, "synth", manifest_json(spec),
                       {"tasks.csv", "submissions.csv", "grades.csv", "timeline.cfg", "manifest.json"});
        os << "wrote " << cohort.student_ids.size() << " students, " << cohort.tasks.size() << " tasks, "
           << cohort.submissions.size() << " submissions to " << out << '\n';
        return kOk;
    }
};

struct FeaturesCommand {
    DataOptions data;
    std::string feature = "sti";
    std::string exam = "midterm";
    std::string scope;
    double sti_threshold = 0.75;
    bool no_target = false;
    std::string out;

    void attach(CLI::App* app) {
        data.attach(app);
        app->add_option("--feature", feature, "Feature family")->check(CLI::IsMember(kFamilies));
        app->add_option("--exam", exam, "Target exam")->check(CLI::IsMember({"midterm", "final"}));
        app->add_option("--scope", scope, "Task scope: midterm, final or all (default: the exam's)")
            ->check(CLI::IsMember({"midterm", "final", "all"}));
        app->add_option("--sti-threshold", sti_threshold, "Pass fraction that qualifies a submission");
        app->add_flag("--no-target", no_target, "Omit the grade column");
        app->add_option("--out", out, "Output directory")->required();
    }

    int run(std::ostream& os) const {
        LoadReport report;
        const auto ds = data.load(&report);
        const auto e = exam_of(exam);
        FeatureConfig fc;
        fc.sti_threshold = sti_threshold;
        if (scope == "all") {
            for (const auto& t : tasks_before(ds, Timestamp::max())) fc.task_scope.push_back(t.task_id);
        } else {
            fc.task_scope = exam_scope(ds, scope.empty() ? e : exam_of(scope));
        }
        const auto m = build_feature_matrix(ds, family_of(feature), fc, no_target ? std::nullopt : std::optional(e));
        fs::create_directories(out);
        std::vector<std::string> written;
        write_text(out, "features.csv", to_csv(m), written);
        write_manifest(out, "features",
                       {{"data", data.to_json()}, {"feature", feature}, {"exam", exam}, {"scope", fc.task_scope},
                        {"sti_threshold", sti_threshold}, {"target", !no_target},
                        {"excluded_students", report.excluded_students}},
                       written);
        os << m.rows() << " rows x " << m.cols() << " columns";
        if (!report.excluded_students.empty()) os << " (" << report.excluded_students.size() << " students excluded)";
        os << '\n';
        return kOk;
    }
};

/// A trained model with the metadata needed to rebuild its features.
inline json model_document(const ExperimentResult& r, const CourseTimeline& tl, const std::vector<std::string>& scope) {
    json j{{"exam", std::string(to_string(r.spec.exam))},
           {"feature_family", std::string(to_string(r.spec.family))},
           {"sti_threshold", r.spec.sti_threshold},
           {"task_scope", scope},
           {"max_points", exam_max(tl, r.spec.exam)}};
    if (r.tree) {
        j["kind"] = "c45";
        j["fit"] = r.tree->to_json();
    } else {
        j["kind"] = "regression";
        j["fit"] = to_json(*r.regression);
    }
    return j;
}

struct TrainCommand {
    DataOptions data;
    std::string model = "c45";
    std::string feature = "sti";
    std::string exam = "midterm";
    double sti_threshold = 0.75;
    double offset = 1.0;
    SplitOptions split;
    SmoteOptions smote;
    TreeOptions tree;
    std::string out;

    void attach(CLI::App* app) {
        data.attach(app);
        app->add_option("--model", model, "c45 or regression")->check(CLI::IsMember({"c45", "regression"}));
        app->add_option("--feature", feature, "Feature family")->check(CLI::IsMember(kFamilies));
        app->add_option("--exam", exam, "Target exam")->check(CLI::IsMember({"midterm", "final"}));
        app->add_option("--sti-threshold", sti_threshold, "Pass fraction that qualifies a submission");
        app->add_option("--offset", offset, "Grade offset before the power transform (regression)");
        split.attach(app);
        smote.attach(app);
        tree.attach(app);
        app->add_option("--out", out, "Output directory")->required();
    }

    ExperimentSpec spec() const {
        ExperimentSpec s;
        s.exam = exam_of(exam);
        s.family = family_of(feature);
        s.model = model == "c45" ? ModelKind::tree : ModelKind::regression;
        s.split = split.spec();
        s.smote = s.model == ModelKind::tree ? smote.config(split.seed) : std::nullopt;
        s.tree = tree.config();
        s.sti_threshold = sti_threshold;
        s.grade_offset = offset;
        return s;
    }

    int run(std::ostream& os) const {
        const auto s = spec();
        if (s.model == ModelKind::regression && s.family != FeatureFamily::sti) {
            throw UsageError("--model regression requires --feature sti");
        }
        const auto ds = data.load();
        const auto r = run_experiment(ds, s);
        auto scope = exam_scope(ds, s.exam);
        if (r.regression) scope = r.regression->column_names;

        fs::create_directories(out);
        std::vector<std::string> written;
        write_text(out, "model.json", model_document(r, ds.timeline(), scope).dump(2) + "\n", written);
        write_text(out, "report.json", to_json(r).dump(2) + "\n", written);
        write_text(out, "report.txt", render(r), written);
        if (r.regression) {
            FeatureConfig fc{s.sti_threshold, r.regression->column_names};
            const auto m = build_feature_matrix(ds, FeatureFamily::sti, fc, s.exam);
            const auto train = m.select_rows(rows_of(m, r.train_ids));
            const auto tables = diagnostic_tables(diagnostics(*r.regression, train, *train.grades));
            write_text(out, "residual_vs_fitted.csv", tables.residual_vs_fitted, written);
            write_text(out, "normal_qq.csv", tables.normal_qq, written);
            write_text(out, "residual_vs_leverage.csv", tables.residual_vs_leverage, written);
        }
        write_manifest(out, "train", {{"data", data.to_json()}, {"spec", to_json(s)}}, written);
        os << render(r);
        return kOk;
    }

    static std::vector<std::size_t> rows_of(const FeatureMatrix& m, const std::vector<std::string>& ids) {
        std::vector<std::size_t> out;
        for (const auto& id : ids) {
            const auto it = std::find(m.student_ids.begin(), m.student_ids.end(), id);
            if (it != m.student_ids.end()) out.push_back(static_cast<std::size_t>(it - m.student_ids.begin()));
        }
        return out;
    }
};

struct LoadedModel {
    json doc;
    Exam exam = Exam::midterm;
    FeatureMatrix features;
    std::optional<TreeModel> tree;
    std::optional<RegressionModel> regression;
    double max_points = 0.0;
};

inline LoadedModel load_model(const std::string& path, const Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path);
    LoadedModel lm;
    try {
        lm.doc = json::parse(in);
        lm.exam = exam_of(lm.doc.at("exam").get<std::string>());
        const auto family = family_of(lm.doc.at("feature_family").get<std::string>());
        FeatureConfig fc;
        fc.sti_threshold = lm.doc.at("sti_threshold").get<double>();
        fc.task_scope = lm.doc.at("task_scope").get<std::vector<std::string>>();
        lm.max_points = lm.doc.at("max_points").get<double>();
        lm.features = with_categories(build_feature_matrix(ds, family, fc, lm.exam));
        if (lm.doc.at("kind") == "c45") {
            lm.tree = TreeModel::from_json(lm.doc.at("fit"));
        } else {
            lm.regression = regression_from_json(lm.doc.at("fit"));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed model file " + path + ": " + e.what());
    }
    return lm;
}

struct PredictCommand {
    DataOptions data;
    std::string model_file;
    std::string out;

    void attach(CLI::App* app) {
        data.attach(app);
        app->add_option("--model-file", model_file, "model.json written by train")->required();
        app->add_option("--out", out, "Output directory")->required();
    }

    int run(std::ostream& os) const {
        const auto ds = data.load();
        const auto lm = load_model(model_file, ds);
        std::ostringstream csv;
        if (lm.tree) {
            csv << "student_id,predicted_class\n";
            const auto pred = lm.tree->predict(lm.features);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                csv << lm.features.student_ids[i] << ',' << to_string(pred[i]) << '\n';
            }
        } else {
            csv << "student_id,predicted_grade,predicted_class\n";
            const auto pred = predict_grades(*lm.regression, lm.features, lm.max_points);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                csv << lm.features.student_ids[i] << ',' << text::format_double(pred[i].points) << ','
                    << to_string(categorize(pred[i].points)) << '\n';
            }
        }
        fs::create_directories(out);
        std::vector<std::string> written;
        write_text(out, "predictions.csv", csv.str(), written);
        write_manifest(out, "predict", {{"data", data.to_json()}, {"model", lm.doc}}, written);
        os << lm.features.rows() << " predictions written\n";
        return kOk;
    }
};

struct EvaluateCommand {
    DataOptions data;
    std::string model_file;
    std::string model = "c45";
    std::string feature = "sti";
    std::string exam = "midterm";
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    double sti_threshold = 0.75;
    TreeOptions tree;
    std::string out;

    void attach(CLI::App* app) {
        data.attach(app);
        app->add_option("--model-file", model_file, "Evaluate a saved model on every student instead of CV");
        app->add_option("--model", model, "c45 or regression")->check(CLI::IsMember({"c45", "regression"}));
        app->add_option("--feature", feature, "Feature family")->check(CLI::IsMember(kFamilies));
        app->add_option("--exam", exam, "Target exam")->check(CLI::IsMember({"midterm", "final"}));
        app->add_option("--folds", folds, "Cross-validation folds")->check(CLI::PositiveNumber);
        app->add_option("--seed", seed, "Fold assignment seed");
        app->add_option("--sti-threshold", sti_threshold, "Pass fraction that qualifies a submission");
        tree.attach(app);
        app->add_option("--out", out, "Output directory")->required();
    }

    int run(std::ostream& os) const {
        if (model == "regression" && model_file.empty() && family_of(feature) != FeatureFamily::sti) {
            throw UsageError("--model regression requires --feature sti");
        }
        const auto ds = data.load();
        json doc;
        std::ostringstream txt;
        if (!model_file.empty()) {
            const auto lm = load_model(model_file, ds);
            const auto& actual = *lm.features.classes;
            std::vector<Category> predicted;
            if (lm.tree) {
                predicted = lm.tree->predict(lm.features);
            } else {
                std::vector<double> points;
                for (const auto& p : predict_grades(*lm.regression, lm.features, lm.max_points)) {
                    points.push_back(p.points);
                }
                predicted = categorize(points);
                const auto rep = regression_report(*lm.features.grades, points);
                doc["error_statistics"] = to_json(rep);
                txt << "error mean " << text::format_fixed(rep.mean_error) << ", std "
                    << text::format_fixed(rep.std_error) << "\n";
            }
            const auto cm = confusion(actual, predicted);
            doc["confusion"] = to_json(cm);
            json per_class = json::array();
            std::vector<MetricsRow> rows;
            for (auto c : kCategories) {
                per_class.push_back(to_json(class_metrics(cm, c)));
                rows.push_back({std::string(to_string(c)), class_metrics(cm, c)});
            }
            doc["class_metrics"] = per_class;
            txt << render_confusion(cm) << '\n' << render_metrics_table(rows);
        } else {
            const auto e = exam_of(exam);
            FeatureConfig fc;
            fc.sti_threshold = sti_threshold;
            fc.task_scope = exam_scope(ds, e);
            const auto m = with_categories(build_feature_matrix(ds, family_of(feature), fc, e));
            if (model == "c45") {
                const auto cv = cross_validate_tree(m, folds, seed, tree.config());
                doc["cv"] = {{"folds", folds}, {"seed", seed}, {"pp_metrics", to_json(cv.averaged)}};
                const MetricsRow row{"PP (" + std::to_string(folds) + "-fold)", cv.averaged};
                txt << render_metrics_table(std::span<const MetricsRow>(&row, 1));
            } else {
                const auto cv = cross_validate_regression(m, folds, seed);
                doc["cv"] = {{"folds", folds},     {"seed", seed},
                             {"mean_error", cv.mean_error}, {"std_error", opt_json(cv.std_error)},
                             {"correlation", opt_json(cv.correlation)}, {"mae", cv.mae},
                             {"rmse", cv.rmse}};
                txt << "corr " << text::format_fixed(cv.correlation) << ", MAE " << text::format_fixed(cv.mae)
                    << ", RMSE " << text::format_fixed(cv.rmse) << '\n';
            }
        }
        fs::create_directories(out);
        std::vector<std::string> written;
        write_text(out, "evaluation.json", doc.dump(2) + "\n", written);
        write_text(out, "evaluation.txt", txt.str(), written);
        write_manifest(out, "evaluate",
                       {{"data", data.to_json()}, {"model_file", model_file}, {"model", model}, {"feature", feature},
                        {"exam", exam}, {"folds", folds}, {"seed", seed}, {"sti_threshold", sti_threshold}},
                       written);
        os << txt.str();
        return kOk;
    }
};

struct StudyCommand {
    DataOptions data;
    std::string exam = "midterm";
    bool all_features = false;
    std::size_t folds = 10;
    std::size_t students = 428;
    bool serial = false;
    SplitOptions split;
    SmoteOptions smote;
    TreeOptions tree;
    std::string out;

    void attach(CLI::App* app) {
        data.attach(app);
        app->add_option("--exam", exam, "midterm, final or both")->check(CLI::IsMember({"midterm", "final", "both"}));
        app->add_flag("--all-features", all_features, "Also run the PR, TO and NOS trees");
        app->add_option("--folds", folds, "Folds for the per-assignment correlation")->check(CLI::PositiveNumber);
        app->add_option("--students", students, "Synthetic cohort size when no data is given");
        app->add_flag("--serial", serial, "Run experiments one after another");
        split.attach(app);
        smote.attach(app);
        tree.attach(app);
        app->add_option("--out", out, "Output directory")->required();
    }

    int run(std::ostream& os) const {
        std::optional<Dataset> ds;
        json source;
        if (data.given()) {
            ds = data.load();
            source = data.to_json();
        } else {
            CohortSpec cs;
            cs.seed = split.seed;
            cs.n_students = students;
            const auto cohort = generate_cohort(cs);
            write_cohort(cohort, fs::path(out) / "cohort");
            ds = cohort.dataset();
            source = {{"synthetic", manifest_json(cs)}};
        }
        std::vector<Exam> exams;
        if (exam == "both") {
            exams = {Exam::midterm, Exam::final};
        } else {
            exams = {exam_of(exam)};
        }
        std::vector<std::string> written;
        for (auto e : exams) {
            StudyConfig sc;
            sc.exam = e;
            sc.all_features = all_features;
            sc.seed = split.seed;
            sc.folds = folds;
            sc.train_fraction = split.train_fraction;
            sc.stratified = !split.no_stratify;
            sc.smote = smote.config(split.seed);
            sc.smote_seed = smote.seed;
            sc.tree = tree.config();
            sc.parallel = !serial;
            const auto result = run_study(*ds, sc);
            const std::string sub(to_string(e));
            const fs::path dir = fs::path(out) / sub;
            fs::create_directories(dir);
            for (const auto& x : result.experiments) {
                write_text(dir, x.spec.name() + ".json", to_json(x).dump(2) + "\n", written);
                written.back() = sub + "/" + written.back();
            }
            if (const auto* reg = result.find("STI-regression")) {
                FeatureConfig fc{reg->spec.sti_threshold, reg->regression->column_names};
                const auto m = build_feature_matrix(*ds, FeatureFamily::sti, fc, e);
                const auto train = m.select_rows(TrainCommand::rows_of(m, reg->train_ids));
                const auto tables = diagnostic_tables(diagnostics(*reg->regression, train, *train.grades));
                for (const auto& [name, body] : {std::pair{"residual_vs_fitted.csv", &tables.residual_vs_fitted},
                                                 std::pair{"normal_qq.csv", &tables.normal_qq},
                                                 std::pair{"residual_vs_leverage.csv", &tables.residual_vs_leverage}}) {
                    write_text(dir, name, *body, written);
                    written.back() = sub + "/" + written.back();
                }
            }
            std::ostringstream corr;
            corr << "label,n_tasks,correlation,mae,rmse\n";
            for (const auto& r : result.correlation) {
                corr << r.label << ',' << (r.is_midterm ? "" : std::to_string(r.n_tasks)) << ','
                     << (r.correlation ? text::format_double(*r.correlation) : "") << ','
                     << text::format_double(r.mae) << ',' << text::format_double(r.rmse) << '\n';
            }
            const std::string rendered = render(result);
            for (const auto& [name, body] : {std::pair<std::string, std::string>{"study.json", to_json(result).dump(2) + "\n"},
                                             {"study.txt", rendered},
                                             {"correlation.csv", corr.str()},
                                             {"boxplot.csv", result.boxplot_csv}}) {
                write_text(dir, name, body, written);
                written.back() = sub + "/" + written.back();
            }
            os << rendered << '\n';
        }
        write_manifest(out, "study",
                       {{"source", source},
                        {"exam", exam},
                        {"all_features", all_features},
                        {"folds", folds},
                        {"split", {{"train_fraction", split.train_fraction}, {"seed", split.seed},
                                   {"stratified", !split.no_stratify}}},
                        {"smote", smote.off ? json(nullptr)
                                            : json{{"k", smote.k}, {"percentage", smote.percentage},
                                                   {"seed", smote.seed.value_or(split.seed)}}},
                        {"tree", {{"min_leaf", tree.min_leaf}, {"confidence", tree.confidence},
                                  {"pruning", !tree.no_prune}}}},
                       written);
        return kOk;
    }
};

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Predict exam performance from auto-grader submission logs", "subperf"};
    app.set_version_flag("--version", std::string(SUBPERF_VERSION));
    app.set_config("--config", "", "Read options from a key=value file");
    app.require_subcommand(1);

    SynthCommand synth;
    FeaturesCommand features;
    TrainCommand train;
    PredictCommand predict;
    EvaluateCommand evaluate;
    StudyCommand study;
    auto* synth_app = app.add_subcommand("synth", "Generate a synthetic cohort");
    auto* features_app = app.add_subcommand("features", "Extract a feature matrix");
    auto* train_app = app.add_subcommand("train", "Train and test one model on a split");
    auto* predict_app = app.add_subcommand("predict", "Apply a saved model");
    auto* evaluate_app = app.add_subcommand("evaluate", "Cross-validate, or score a saved model");
    auto* study_app = app.add_subcommand("study", "Run the model comparison and correlation tables");
    synth.attach(synth_app);
    features.attach(features_app);
    train.attach(train_app);
    predict.attach(predict_app);
    evaluate.attach(evaluate_app);
    study.attach(study_app);

    auto usage = [&](const std::string& what) {
        err << "error: " << what << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsage;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << SUBPERF_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        return usage(e.what());
    }

    try {
        if (synth_app->parsed()) return synth.run(out);
        if (features_app->parsed()) return features.run(out);
        if (train_app->parsed()) return train.run(out);
        if (predict_app->parsed()) return predict.run(out);
        if (evaluate_app->parsed()) return evaluate.run(out);
        return study.run(out);
    } catch (const UsageError& e) {
        return usage(e.what());
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
}

}  // namespace subperf::cli
