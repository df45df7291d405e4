#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subperf/category.hpp"
#include "subperf/dataset.hpp"
#include "subperf/errors.hpp"
#include "subperf/rng.hpp"
#include "subperf/text.hpp"
#include "subperf/timeutil.hpp"

namespace subperf {

struct HourRange {
    double low = 0.0;
    double high = 0.0;
};

struct CountRange {
    long long low = 1;
    long long high = 1;
};

/// Parameters of a synthetic cohort. Archetype arrays are indexed PP, SP, GP.
struct CohortSpec {
    std::size_t n_students = 428;
    std::array<double, kCategoryCount> archetype_mix{0.12, 0.38, 0.50};
    std::array<HourRange, kCategoryCount> sti_ranges{{{10.0, 60.0}, {60.0, 100.0}, {100.0, 140.0}}};
    std::array<CountRange, kCategoryCount> submission_count_ranges{{{6, 30}, {3, 15}, {1, 8}}};
    double heavy_resubmitter_rate = 0.02;  // PP tasks drawn from [100, heavy_resubmitter_max]
    long long heavy_resubmitter_max = 211;
    double sti_jitter = 20.0;       // per-task sd (hours) around the student's level
    double noise = 10.0;            // grade noise sd (points)
    double incomplete_rate = 0.04;  // tasks whose best submission stays below 100%
    double recent_assignment_weight = 3.0;
    double final_midterm_loading = 0.6;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_students == 0) throw ConfigError("cohort: n_students must be positive");
        double total = 0.0;
        for (double m : archetype_mix) {
            if (m < 0.0) throw ConfigError("cohort: archetype fractions must be non-negative");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("cohort: archetype mix must sum to 1");
        for (const auto& r : sti_ranges) {
            if (!(r.low < r.high) || r.low < 0.0) throw ConfigError("cohort: STI ranges must satisfy 0 <= low < high");
        }
        for (const auto& r : submission_count_ranges) {
            if (!(r.low < r.high) || r.low < 1) throw ConfigError("cohort: submission ranges must satisfy 1 <= low < high");
        }
        if (heavy_resubmitter_max < 100) throw ConfigError("cohort: heavy resubmitter tail must reach 100");
        for (double p : {heavy_resubmitter_rate, incomplete_rate, final_midterm_loading}) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("cohort: rates must lie in [0, 1]");
        }
        if (sti_jitter < 0.0 || noise < 0.0) throw ConfigError("cohort: jitter and noise must be non-negative");
        if (!(recent_assignment_weight > 0.0)) throw ConfigError("cohort: assignment weight must be positive");
    }
};

struct AssignmentLayout {
    std::string assignment_id;
    Timestamp deadline;
    std::size_t task_count = 1;
};

struct CourseLayout {
    std::vector<AssignmentLayout> assignments;
    CourseTimeline timeline;

    /// 28 tasks in 8 assignments (2, 5, 3, 6 before the midterm; 3, 3, 4, 2 after).
    static CourseLayout standard() {
        auto at = [](const char* s) { return *parse_timestamp(s); };
        CourseLayout c;
        c.timeline = {at("2016-10-26T18:00:00Z"), at("2016-12-12T18:00:00Z"), 110.0, 120.0};
        c.assignments = {{"a0", at("2016-09-23T18:00:00Z"), 2}, {"a1", at("2016-09-30T18:00:00Z"), 5},
                         {"a2", at("2016-10-07T18:00:00Z"), 3}, {"a3", at("2016-10-21T18:00:00Z"), 6},
                         {"a4", at("2016-11-04T18:00:00Z"), 3}, {"a5", at("2016-11-11T18:00:00Z"), 3},
                         {"a6", at("2016-11-25T18:00:00Z"), 4}, {"a7", at("2016-12-02T18:00:00Z"), 2}};
        return c;
    }
};

struct SyntheticCohort {
    CohortSpec spec;
    std::vector<TaskSpec> tasks;
    CourseTimeline timeline;
    std::vector<SubmissionRecord> submissions;
    std::vector<GradeRecord> grades;
    std::vector<std::string> student_ids;
    std::vector<Category> archetypes;
    std::vector<std::vector<double>> drawn_sti;  // [student][task], hours

    Dataset dataset() const { return Dataset::create(tasks, timeline, submissions, grades); }
};

namespace detail {

// Grade = kSlope * weighted mean STI + kIntercept maps the STI range bounds
// 60 and 100 hours onto the category boundaries 50 and 80.
inline constexpr double kGradeSlope = 0.75;
inline constexpr double kGradeIntercept = 5.0;

inline std::vector<Category> draw_archetypes(const CohortSpec& spec, Rng& rng) {
    std::array<std::size_t, kCategoryCount> quota{};
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        const double exact = spec.archetype_mix[c] * static_cast<double>(spec.n_students);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[c];
        rem.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < spec.n_students; ++r, ++assigned) ++quota[rem[r % rem.size()].second];
    std::vector<Category> out;
    for (std::size_t c = 0; c < kCategoryCount; ++c) out.insert(out.end(), quota[c], kCategories[c]);
    rng.shuffle(out);
    return out;
}

inline std::vector<Outcome> outcome_vector(std::size_t n, std::size_t passed, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Outcome> out(n, Outcome::failed);
    for (std::size_t i = 0; i < passed; ++i) out[order[i]] = Outcome::passed;
    return out;
}

}  // namespace detail

/// Draws a cohort. Per student: an archetype, a base STI level inside the
/// archetype's range, per-task STIs jittered around it, and a submission
/// trajectory whose earliest submission reaching 75% lands exactly at the
/// drawn STI. Grades are an affine function of the (weighted) mean STI plus
/// noise; the final is additionally loaded on the midterm.
inline SyntheticCohort generate_cohort(const CohortSpec& spec, const CourseLayout& course = CourseLayout::standard()) {
    spec.validate();
    course.timeline.validate();
    SyntheticCohort out;
    out.spec = spec;
    out.timeline = course.timeline;

    std::vector<bool> recent;  // task belongs to the last assignment before the midterm
    {
        Timestamp last_pre{};
        bool found = false;
        for (const auto& a : course.assignments) {
            if (a.deadline <= course.timeline.midterm_date && (!found || a.deadline > last_pre)) {
                last_pre = a.deadline;
                found = true;
            }
        }
        std::size_t k = 0;
        for (const auto& a : course.assignments) {
            for (std::size_t t = 0; t < a.task_count; ++t, ++k) {
                TaskSpec task;
                char id[16];
                std::snprintf(id, sizeof id, "t%02zu", k + 1);
                task.task_id = id;
                task.assignment_id = a.assignment_id;
                task.deadline = a.deadline;
                const std::size_t n_tc = 4 + (k * 5) % 9;
                for (std::size_t c = 0; c < n_tc; ++c) task.testcase_ids.push_back("tc" + std::to_string(c + 1));
                out.tasks.push_back(std::move(task));
                recent.push_back(found && a.deadline == last_pre);
            }
        }
    }

    Rng arch_rng(derive_seed(spec.seed, 0xA5C4));
    out.archetypes = detail::draw_archetypes(spec, arch_rng);

    const std::size_t width = std::to_string(spec.n_students).size() < 4 ? 4 : std::to_string(spec.n_students).size();
    for (std::size_t s = 0; s < spec.n_students; ++s) {
        std::string sid = std::to_string(s + 1);
        sid = "s" + std::string(width - sid.size(), '0') + sid;
        out.student_ids.push_back(sid);

        Rng rng(derive_seed(spec.seed, s + 1));
        const auto arch = index_of(out.archetypes[s]);
        const auto& range = spec.sti_ranges[arch];
        const double level = rng.uniform(range.low, range.high);

        std::vector<double> sti(out.tasks.size());
        double pre_sum = 0.0, pre_weight = 0.0, all_sum = 0.0;
        for (std::size_t t = 0; t < out.tasks.size(); ++t) {
            const auto& task = out.tasks[t];
            // Drawn hours are kept at millisecond resolution, like the timestamps.
            sti[t] = std::max(0.5, level + spec.sti_jitter * rng.normal());
            all_sum += sti[t];
            if (task.deadline <= course.timeline.midterm_date) {
                const double w = recent[t] ? spec.recent_assignment_weight : 1.0;
                pre_sum += w * sti[t];
                pre_weight += w;
            }

            const auto& cr = spec.submission_count_ranges[arch];
            long long count = rng.integer(cr.low, cr.high);
            if (out.archetypes[s] == Category::PP && rng.bernoulli(spec.heavy_resubmitter_rate)) {
                count = rng.integer(100, spec.heavy_resubmitter_max);
            }
            const std::size_t n = task.testcase_count();
            const std::size_t need = (3 * n + 3) / 4;  // smallest m with m / n >= 0.75
            std::size_t final_pass = n;
            if (need < n && rng.bernoulli(spec.incomplete_rate)) {
                final_pass = static_cast<std::size_t>(rng.integer(static_cast<long long>(need), static_cast<long long>(n - 1)));
            }
            const auto pre_count = static_cast<std::size_t>(rng.integer(0, count - 1));
            const auto post_count = static_cast<std::size_t>(count) - 1 - pre_count;
            const Timestamp qualifying = add_hours(task.deadline, -sti[t]);

            Timestamp when = qualifying;
            std::vector<SubmissionRecord> early;
            for (std::size_t i = 0; i < pre_count; ++i) {
                when = add_hours(when, -rng.uniform(0.02, 4.0));
                SubmissionRecord r{sid, task.task_id, when, {}};
                if (rng.bernoulli(0.1)) {
                    r.outcomes.assign(n, Outcome::compile_error);
                } else {
                    r.outcomes = detail::outcome_vector(n, static_cast<std::size_t>(rng.integer(0, static_cast<long long>(need) - 1)), rng);
                }
                early.push_back(std::move(r));
            }
            std::reverse(early.begin(), early.end());
            for (auto& r : early) out.submissions.push_back(std::move(r));

            std::vector<std::size_t> passes(post_count + 1);
            for (auto& p : passes) {
                p = static_cast<std::size_t>(rng.integer(static_cast<long long>(need), static_cast<long long>(final_pass)));
            }
            std::sort(passes.begin(), passes.end());
            passes.back() = final_pass;
            when = qualifying;
            for (std::size_t i = 0; i < passes.size(); ++i) {
                if (i > 0) when = add_hours(when, rng.uniform(0.02, 6.0));
                out.submissions.push_back({sid, task.task_id, when, detail::outcome_vector(n, passes[i], rng)});
            }
        }
        out.drawn_sti.push_back(sti);

        const double pre_mean = pre_sum / pre_weight;
        const double all_mean = all_sum / static_cast<double>(out.tasks.size());
        const double midterm_det = detail::kGradeSlope * pre_mean + detail::kGradeIntercept;
        const double midterm = std::clamp(midterm_det + spec.noise * rng.normal(), 0.0, course.timeline.midterm_max);
        const double final_det = spec.final_midterm_loading * midterm +
                                 (1.0 - spec.final_midterm_loading) *
                                     (detail::kGradeSlope * all_mean + detail::kGradeIntercept);
        const double final = std::clamp(final_det + spec.noise * rng.normal(), 0.0, course.timeline.final_max);
        // Grades are reported to two decimals.
        out.grades.push_back({sid, std::round(midterm * 100.0) / 100.0, std::round(final * 100.0) / 100.0});
    }
    return out;
}

inline std::string tasks_csv(const std::vector<TaskSpec>& tasks) {
    std::ostringstream os;
    os << "task_id,assignment_id,deadline,testcase_ids\n";
    for (const auto& t : tasks) {
        os << t.task_id << ',' << t.assignment_id << ',' << format_timestamp(t.deadline) << ',';
        for (std::size_t i = 0; i < t.testcase_ids.size(); ++i) os << (i ? ";" : "") << t.testcase_ids[i];
        os << '\n';
    }
    return os.str();
}

inline std::string submissions_csv(const std::vector<SubmissionRecord>& subs) {
    std::ostringstream os;
    os << "student_id,task_id,submitted_at,outcomes\n";
    for (const auto& s : subs) {
        os << s.student_id << ',' << s.task_id << ',' << format_timestamp(s.submitted_at) << ',';
        for (auto o : s.outcomes) os << outcome_char(o);
        os << '\n';
    }
    return os.str();
}

inline std::string grades_csv(const std::vector<GradeRecord>& grades) {
    std::ostringstream os;
    os << "student_id,midterm,final\n";
    for (const auto& g : grades) {
        os << g.student_id << ',' << (g.midterm ? text::format_double(*g.midterm) : "") << ','
           << (g.final ? text::format_double(*g.final) : "") << '\n';
    }
    return os.str();
}

inline nlohmann::json manifest_json(const CohortSpec& s) {
    nlohmann::json ranges = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json mix = nlohmann::json::object();
    for (auto c : kCategories) {
        const std::string key(to_string(c));
        ranges[key] = {s.sti_ranges[index_of(c)].low, s.sti_ranges[index_of(c)].high};
        counts[key] = {s.submission_count_ranges[index_of(c)].low, s.submission_count_ranges[index_of(c)].high};
        mix[key] = s.archetype_mix[index_of(c)];
    }
    return {{"generator", "subperf-synth"},
            {"version", SUBPERF_VERSION},
            {"seed", s.seed},
            {"n_students", s.n_students},
            {"archetype_mix", mix},
            {"sti_ranges", ranges},
            {"submission_count_ranges", counts},
            {"heavy_resubmitter_rate", s.heavy_resubmitter_rate},
            {"heavy_resubmitter_max", s.heavy_resubmitter_max},
            {"sti_jitter", s.sti_jitter},
            {"noise", s.noise},
            {"incomplete_rate", s.incomplete_rate},
            {"recent_assignment_weight", s.recent_assignment_weight},
            {"final_midterm_loading", s.final_midterm_loading},
            {"files", {"tasks.csv", "submissions.csv", "grades.csv", "timeline.cfg"}}};
}

/// Writes tasks.csv, submissions.csv, grades.csv, timeline.cfg and manifest.json.
inline void write_cohort(const SyntheticCohort& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    text::write_file_atomic(dir / "tasks.csv", tasks_csv(c.tasks));
    text::write_file_atomic(dir / "submissions.csv", submissions_csv(c.submissions));
    text::write_file_atomic(dir / "grades.csv", grades_csv(c.grades));
    text::write_file_atomic(dir / "timeline.cfg", format_timeline_config(c.timeline));
    text::write_file_atomic(dir / "manifest.json", manifest_json(c.spec).dump(2) + "\n");
}

}  // namespace subperf
