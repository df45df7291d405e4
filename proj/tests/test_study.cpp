#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace subperf;

namespace {

const Dataset& cohort() {
    static const Dataset ds = generate_cohort(CohortSpec{}).dataset();
    return ds;
}

ExperimentSpec sti_tree(Exam exam) {
    ExperimentSpec s;
    s.exam = exam;
    s.split.seed = 1;
    s.smote->seed = 1;
    return s;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Study, ExperimentNames) {
    StudyConfig c;
    std::vector<std::string> names;
    for (const auto& s : c.experiments()) names.push_back(s.name());
    EXPECT_EQ(names, (std::vector<std::string>{"PR", "TO", "NOS", "STI-tree", "STI-regression"}));
    c.all_features = false;
    EXPECT_EQ(c.experiments().size(), 2u);
    for (const auto& s : StudyConfig{}.experiments()) {
        if (s.smote) {
            EXPECT_EQ(s.smote->seed, 1u);
        }
    }
    StudyConfig own;
    own.seed = 4;
    own.smote_seed = 9;
    EXPECT_EQ(own.experiments()[0].split.seed, 4u);
    EXPECT_EQ(own.experiments()[0].smote->seed, 9u);
    own.smote_seed.reset();
    EXPECT_EQ(own.experiments()[0].smote->seed, 4u);
}

TEST(Study, RegressionNeedsStiFamily) {
    ExperimentSpec s;
    s.model = ModelKind::regression;
    s.family = FeatureFamily::submission_count;
    EXPECT_THROW(run_experiment(cohort(), s), ConfigError);
}

TEST(Study, ExamScopes) {
    EXPECT_EQ(exam_scope(cohort(), Exam::midterm).size(), 16u);
    EXPECT_EQ(exam_scope(cohort(), Exam::final).size(), 28u);
}

TEST(Study, TrainAndTestAreDisjointAndSmoteRowsFollowTheCountLaw) {
    const auto r = run_experiment(cohort(), sti_tree(Exam::midterm));
    std::set<std::string> train(r.train_ids.begin(), r.train_ids.end());
    for (const auto& id : r.test_ids) EXPECT_FALSE(train.contains(id)) << id;
    for (const auto& id : r.train_ids) EXPECT_FALSE(id.starts_with("smote:"));
    EXPECT_EQ(train.size() + r.test_ids.size(), cohort().students().size());

    // The minority class of the training side gets 100% extra rows.
    std::map<std::string, Category> cls;
    const auto grades = exam_grades(cohort(), Exam::midterm);
    for (std::size_t i = 0; i < grades.size(); ++i) cls[cohort().students()[i]] = categorize(grades[i]);
    std::array<std::size_t, 3> counts{};
    for (const auto& id : r.train_ids) ++counts[index_of(cls[id])];
    EXPECT_EQ(r.synthetic_rows, *std::min_element(counts.begin(), counts.end()));
    EXPECT_EQ(r.confusion.total(), r.test_ids.size());
}

TEST(Study, RegressionExperimentProducesGradesAndReport) {
    auto s = sti_tree(Exam::final);
    s.model = ModelKind::regression;
    const auto r = run_experiment(cohort(), s);
    ASSERT_TRUE(r.regression && r.report);
    EXPECT_FALSE(r.spec.smote);
    EXPECT_EQ(r.synthetic_rows, 0u);
    EXPECT_EQ(r.predicted_grades.size(), r.test_ids.size());
    for (double g : r.predicted_grades) {
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 120.0);
    }
    EXPECT_EQ(r.predicted, categorize(r.predicted_grades));
    EXPECT_LT(r.regression->fit_stats.p_value, 0.05);
}

TEST(Study, SerialAndParallelRunsAgree) {
    StudyConfig c;
    c.parallel = false;
    const auto a = run_study(cohort(), c);
    c.parallel = true;
    const auto b = run_study(cohort(), c);
    ASSERT_EQ(a.experiments.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a.experiments[i].confusion, b.experiments[i].confusion);
        EXPECT_EQ(a.experiments[i].predicted, b.experiments[i].predicted);
    }
    EXPECT_EQ(a.boxplot_csv, b.boxplot_csv);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Study, BoxplotRowsMatchPredictedPoorColumn) {
    const auto r = run_study(cohort(), StudyConfig{});
    const auto lines = csv_lines(r.boxplot_csv);
    ASSERT_EQ(lines[0], "model,student_id,actual_grade");
    for (const auto& e : r.experiments) {
        const auto name = e.spec.name();
        std::size_t rows = 0;
        std::string count_line;
        for (const auto& l : lines) {
            if (!l.starts_with(name + ",")) continue;
            if (l.find(",__") == std::string::npos) ++rows;
            if (l.starts_with(name + ",__count__,")) count_line = l;
        }
        EXPECT_EQ(rows, e.confusion.predicted_total(Category::PP)) << name;
        EXPECT_EQ(count_line, name + ",__count__," + std::to_string(rows));
    }
    EXPECT_NE(r.find("STI-tree"), nullptr);
    EXPECT_EQ(r.find("nope"), nullptr);
}

TEST(Study, BoxplotSummaryUsesHinges) {
    const auto ds = testing_support::small_dataset();
    const auto csv = export_boxplot_data(ds, Exam::midterm, {{"M", {"s1", "s2", "s3"}}, {"E", {}}});
    // Sorted 30, 60, 95: hinges are the medians of {30, 60} and {60, 95}.
    EXPECT_NE(csv.find("M,__min__,30\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("M,__q1__,45\n"), std::string::npos);
    EXPECT_NE(csv.find("M,__median__,60\n"), std::string::npos);
    EXPECT_NE(csv.find("M,__q3__,77.5\n"), std::string::npos);
    EXPECT_NE(csv.find("M,__max__,95\n"), std::string::npos);
    EXPECT_TRUE(csv.ends_with("E,__count__,0\n"));
    EXPECT_THROW(export_boxplot_data(ds, Exam::final, {{"M", {"nobody"}}}), ReferentialError);
}

TEST(Study, CorrelationTableLayout) {
    const auto mid = per_assignment_correlation(cohort(), Exam::midterm);
    ASSERT_EQ(mid.size(), 4u);
    std::vector<std::size_t> sizes;
    for (const auto& r : mid) sizes.push_back(r.n_tasks);
    EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 5, 3, 6}));
    EXPECT_EQ(mid.back().label, "a3");

    const auto fin = per_assignment_correlation(cohort(), Exam::final);
    ASSERT_EQ(fin.size(), 9u);
    EXPECT_TRUE(fin[4].is_midterm);
    EXPECT_EQ(fin[4].label, "midterm");
    EXPECT_EQ(fin[5].label, "a4");
    for (const auto& r : fin) {
        ASSERT_TRUE(r.correlation);
        EXPECT_GE(r.rmse, r.mae);
    }
    const auto text = render_correlation_table(fin);
    EXPECT_NE(text.find("midterm"), std::string::npos);
    EXPECT_NE(text.find("sub tasks"), std::string::npos);
}

TEST(Study, LinearCohortGivesNearDiagonalRegressionMatrix) {
    CohortSpec spec;
    spec.noise = 0.0;
    spec.sti_jitter = 2.0;  // identical columns would make the design singular
    const auto ds = generate_cohort(spec).dataset();
    auto s = sti_tree(Exam::midterm);
    s.model = ModelKind::regression;
    const auto r = run_experiment(ds, s);
    EXPECT_GE(static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total()), 0.9);
}

TEST(Study, ConstantFeaturePredictsNoPoorStudents) {
    // Every student passes every test: passing rate is 1 everywhere, so the
    // tree is a single leaf labeled with the majority class.
    CohortSpec spec;
    spec.incomplete_rate = 0.0;
    const auto ds = generate_cohort(spec).dataset();
    auto s = sti_tree(Exam::midterm);
    s.family = FeatureFamily::passing_rate;
    s.smote.reset();
    const auto r = run_experiment(ds, s);
    ASSERT_TRUE(r.tree);
    EXPECT_TRUE(r.tree->root().leaf);
    EXPECT_EQ(*r.pp.recall, 0.0);
    EXPECT_FALSE(r.pp.precision);
}

TEST(Study, RenderedReportsMentionEveryModel) {
    StudyConfig c;
    c.exam = Exam::final;
    const auto r = run_study(cohort(), c);
    const auto text = render(r);
    for (const auto* name : {"PR", "TO", "NOS", "STI-tree", "STI-regression"}) {
        EXPECT_NE(text.find(name), std::string::npos) << name;
    }
    const auto j = to_json(r);
    EXPECT_EQ(j["experiments"].size(), 5u);
}
