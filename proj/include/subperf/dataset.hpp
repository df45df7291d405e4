#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subperf/errors.hpp"
#include "subperf/text.hpp"
#include "subperf/timeutil.hpp"

namespace subperf {

enum class Exam { midterm, final };

constexpr std::string_view to_string(Exam e) noexcept { return e == Exam::midterm ? "midterm" : "final"; }

inline std::optional<Exam> parse_exam(std::string_view s) {
    if (s == "midterm") return Exam::midterm;
    if (s == "final") return Exam::final;
    return std::nullopt;
}

struct TaskSpec {
    std::string task_id;
    std::string assignment_id;
    Timestamp deadline;
    std::vector<std::string> testcase_ids;

    std::size_t testcase_count() const noexcept { return testcase_ids.size(); }
    bool operator==(const TaskSpec&) const = default;
};

struct CourseTimeline {
    Timestamp midterm_date;
    Timestamp final_date;
    double midterm_max = 110.0;
    double final_max = 120.0;

    Timestamp date_of(Exam e) const { return e == Exam::midterm ? midterm_date : final_date; }
    double max_of(Exam e) const { return e == Exam::midterm ? midterm_max : final_max; }

    void validate() const {
        if (!(midterm_date < final_date)) throw ConfigError("timeline: midterm_date must precede final_date");
        if (!(midterm_max > 0.0) || !(final_max > 0.0)) throw ConfigError("timeline: exam maxima must be positive");
    }

    bool operator==(const CourseTimeline&) const = default;
};

enum class Outcome : std::uint8_t { passed, failed, compile_error };

inline std::optional<Outcome> parse_outcome(char c) {
    switch (c) {
        case 'P': return Outcome::passed;
        case 'F': return Outcome::failed;
        case 'C': return Outcome::compile_error;
        default: return std::nullopt;
    }
}

inline char outcome_char(Outcome o) {
    switch (o) {
        case Outcome::passed: return 'P';
        case Outcome::failed: return 'F';
        case Outcome::compile_error: return 'C';
    }
    return '?';
}

struct SubmissionRecord {
    std::string student_id;
    std::string task_id;
    Timestamp submitted_at;
    std::vector<Outcome> outcomes;

    std::size_t passed_count() const noexcept {
        return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), Outcome::passed));
    }
    bool operator==(const SubmissionRecord&) const = default;
};

struct GradeRecord {
    std::string student_id;
    std::optional<double> midterm;
    std::optional<double> final;

    std::optional<double> of(Exam e) const { return e == Exam::midterm ? midterm : final; }
    bool operator==(const GradeRecord&) const = default;
};

struct LoadReport {
    std::size_t students_read = 0;
    std::size_t students_retained = 0;
    std::vector<std::string> excluded_students;  // missing an exam grade
    std::size_t submissions_read = 0;
    std::size_t submissions_retained = 0;
};

namespace detail {

// Why a submission row violates the record invariants, or empty if valid.
inline std::string submission_problem(const SubmissionRecord& s, const TaskSpec& task) {
    if (s.outcomes.size() != task.testcase_count()) {
        return "task " + task.task_id + " has " + std::to_string(task.testcase_count()) + " testcases but " +
               std::to_string(s.outcomes.size()) + " outcomes were given";
    }
    const auto compile_errors = std::count(s.outcomes.begin(), s.outcomes.end(), Outcome::compile_error);
    if (compile_errors != 0 && static_cast<std::size_t>(compile_errors) != s.outcomes.size()) {
        return "compile_error outcome mixed with testcase results";
    }
    return {};
}

inline std::string pair_key(std::string_view student, std::string_view task) {
    std::string key;
    key.reserve(student.size() + task.size() + 1);
    key.append(student).push_back('\x1f');
    key.append(task);
    return key;
}

}  // namespace detail

/// Validated, immutable course dataset. Only students holding both exam
/// grades are retained; their submissions are indexed per (student, task).
class Dataset {
public:
    /// Validates in-memory records and builds the indexes.
    static Dataset create(std::vector<TaskSpec> tasks, CourseTimeline timeline,
                          std::vector<SubmissionRecord> submissions, std::vector<GradeRecord> grades,
                          LoadReport* report = nullptr) {
        timeline.validate();
        Dataset ds;
        ds.timeline_ = timeline;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& t = tasks[i];
            if (t.testcase_ids.empty()) throw ConfigError("task " + t.task_id + " has no testcases");
            if (!ds.task_index_.emplace(t.task_id, i).second) throw ConfigError("duplicate task_id " + t.task_id);
        }
        ds.tasks_ = std::move(tasks);

        std::map<std::string, const GradeRecord*> by_student;
        for (const auto& g : grades) {
            if (!by_student.emplace(g.student_id, &g).second) {
                throw ConfigError("duplicate grade record for student " + g.student_id);
            }
            for (auto [value, max, name] : {std::tuple{g.midterm, timeline.midterm_max, "midterm"},
                                             std::tuple{g.final, timeline.final_max, "final"}}) {
                if (value && (*value < 0.0 || *value > max)) {
                    throw DomainError(std::string(name) + " grade of " + g.student_id + " outside [0, max]");
                }
            }
        }

        LoadReport local;
        local.students_read = grades.size();
        local.submissions_read = submissions.size();
        std::set<std::string> retained;
        for (const auto& [id, g] : by_student) {
            if (g->midterm && g->final) {
                retained.insert(id);
                ds.grades_.push_back(*g);
            } else {
                local.excluded_students.push_back(id);
            }
        }
        ds.students_.assign(retained.begin(), retained.end());

        std::set<std::string> seen;
        for (std::size_t i = 0; i < submissions.size(); ++i) {
            auto& s = submissions[i];
            const auto it = ds.task_index_.find(s.task_id);
            if (it == ds.task_index_.end()) {
                throw ReferentialError("submission #" + std::to_string(i + 1) + " references unknown task " +
                                       s.task_id);
            }
            if (!by_student.contains(s.student_id)) {
                throw ReferentialError("submission #" + std::to_string(i + 1) + " references student " +
                                       s.student_id + " who has no grade record");
            }
            if (auto problem = detail::submission_problem(s, ds.tasks_[it->second]); !problem.empty()) {
                throw DomainError("submission #" + std::to_string(i + 1) + ": " + problem);
            }
            auto key = detail::pair_key(s.student_id, s.task_id);
            if (!seen.insert(key + '\x1f' + format_timestamp(s.submitted_at)).second) {
                throw DomainError("submission #" + std::to_string(i + 1) +
                                  ": duplicate (student, task, timestamp)");
            }
            if (!retained.contains(s.student_id)) continue;
            ds.by_pair_[key].push_back(ds.submissions_.size());
            ds.submissions_.push_back(std::move(s));
        }
        for (auto& [key, idx] : ds.by_pair_) {
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return ds.submissions_[a].submitted_at < ds.submissions_[b].submitted_at;
            });
        }
        for (std::size_t i = 0; i < ds.grades_.size(); ++i) ds.grade_index_.emplace(ds.grades_[i].student_id, i);

        local.students_retained = ds.students_.size();
        local.submissions_retained = ds.submissions_.size();
        if (report) *report = std::move(local);
        return ds;
    }

    const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
    const CourseTimeline& timeline() const noexcept { return timeline_; }
    const std::vector<SubmissionRecord>& submissions() const noexcept { return submissions_; }
    /// Grade records of retained students, sorted by student_id.
    const std::vector<GradeRecord>& grades() const noexcept { return grades_; }
    /// Retained student ids, sorted.
    const std::vector<std::string>& students() const noexcept { return students_; }

    bool has_task(std::string_view task_id) const { return task_index_.contains(std::string(task_id)); }

    const TaskSpec& task(std::string_view task_id) const {
        const auto it = task_index_.find(std::string(task_id));
        if (it == task_index_.end()) throw ReferentialError("unknown task " + std::string(task_id));
        return tasks_[it->second];
    }

    const GradeRecord& grade(std::string_view student_id) const {
        const auto it = grade_index_.find(std::string(student_id));
        if (it == grade_index_.end()) throw ReferentialError("unknown student " + std::string(student_id));
        return grades_[it->second];
    }

    /// Submissions of one student to one task, oldest first.
    std::vector<const SubmissionRecord*> submissions_for(std::string_view student_id,
                                                         std::string_view task_id) const {
        task(task_id);
        std::vector<const SubmissionRecord*> out;
        const auto it = by_pair_.find(detail::pair_key(student_id, task_id));
        if (it == by_pair_.end()) return out;
        out.reserve(it->second.size());
        for (std::size_t i : it->second) out.push_back(&submissions_[i]);
        return out;
    }

    bool operator==(const Dataset& o) const {
        return tasks_ == o.tasks_ && timeline_ == o.timeline_ && submissions_ == o.submissions_ &&
               grades_ == o.grades_ && students_ == o.students_;
    }

private:
    Dataset() = default;

    std::vector<TaskSpec> tasks_;
    CourseTimeline timeline_;
    std::vector<SubmissionRecord> submissions_;
    std::vector<GradeRecord> grades_;
    std::vector<std::string> students_;
    std::unordered_map<std::string, std::size_t> task_index_;
    std::unordered_map<std::string, std::size_t> grade_index_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_pair_;
};

namespace detail {

inline void expect_header(const std::vector<std::string>& lines, const std::string& file,
                          std::string_view header) {
    if (lines.empty() || text::trim(lines[0]) != header) {
        throw ParseError(file, 1, "expected header '" + std::string(header) + "'");
    }
}

inline std::vector<std::string> fields(const std::string& line, std::size_t expected, const std::string& file,
                                       std::size_t lineno) {
    auto parts = text::split(line, ',');
    if (parts.size() != expected) {
        throw ParseError(file, lineno,
                         "expected " + std::to_string(expected) + " fields, got " + std::to_string(parts.size()));
    }
    for (auto& p : parts) p = std::string(text::trim(p));
    return parts;
}

}  // namespace detail

inline std::vector<TaskSpec> parse_tasks_file(const std::filesystem::path& path) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    detail::expect_header(lines, file, "task_id,assignment_id,deadline,testcase_ids");
    std::vector<TaskSpec> tasks;
    std::set<std::string> ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        auto f = detail::fields(lines[i], 4, file, i + 1);
        TaskSpec t;
        t.task_id = f[0];
        t.assignment_id = f[1];
        if (t.task_id.empty()) throw ParseError(file, i + 1, "empty task_id");
        const auto deadline = parse_timestamp(f[2]);
        if (!deadline) throw ParseError(file, i + 1, "bad timestamp '" + f[2] + "'");
        t.deadline = *deadline;
        for (auto& id : text::split(f[3], ';')) {
            auto trimmed = std::string(text::trim(id));
            if (trimmed.empty()) throw ParseError(file, i + 1, "empty testcase id");
            t.testcase_ids.push_back(std::move(trimmed));
        }
        if (!ids.insert(t.task_id).second) throw ParseError(file, i + 1, "duplicate task_id " + t.task_id);
        tasks.push_back(std::move(t));
    }
    return tasks;
}

inline std::vector<GradeRecord> parse_grades_file(const std::filesystem::path& path, const CourseTimeline& timeline) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    detail::expect_header(lines, file, "student_id,midterm,final");
    std::vector<GradeRecord> grades;
    std::set<std::string> ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        auto f = detail::fields(lines[i], 3, file, i + 1);
        GradeRecord g;
        g.student_id = f[0];
        if (g.student_id.empty()) throw ParseError(file, i + 1, "empty student_id");
        auto parse_grade = [&](const std::string& field, double max) -> std::optional<double> {
            if (field.empty()) return std::nullopt;
            const auto v = text::parse_double(field);
            if (!v) throw ParseError(file, i + 1, "bad grade '" + field + "'");
            if (*v < 0.0 || *v > max) throw ParseError(file, i + 1, "grade " + field + " outside [0, max]");
            return v;
        };
        g.midterm = parse_grade(f[1], timeline.midterm_max);
        g.final = parse_grade(f[2], timeline.final_max);
        if (!ids.insert(g.student_id).second) throw ParseError(file, i + 1, "duplicate student " + g.student_id);
        grades.push_back(std::move(g));
    }
    return grades;
}

inline std::vector<SubmissionRecord> parse_submissions_file(const std::filesystem::path& path,
                                                            const std::vector<TaskSpec>& tasks) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    detail::expect_header(lines, file, "student_id,task_id,submitted_at,outcomes");
    std::unordered_map<std::string, const TaskSpec*> by_id;
    for (const auto& t : tasks) by_id.emplace(t.task_id, &t);

    std::vector<SubmissionRecord> out;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        auto f = detail::fields(lines[i], 4, file, i + 1);
        SubmissionRecord s;
        s.student_id = f[0];
        s.task_id = f[1];
        const auto it = by_id.find(s.task_id);
        if (it == by_id.end()) {
            throw ReferentialError(file + ":" + std::to_string(i + 1) + ": unknown task " + s.task_id);
        }
        const auto ts = parse_timestamp(f[2]);
        if (!ts) throw ParseError(file, i + 1, "bad timestamp '" + f[2] + "'");
        s.submitted_at = *ts;
        for (char c : f[3]) {
            const auto o = parse_outcome(c);
            if (!o) throw ParseError(file, i + 1, std::string("bad outcome character '") + c + "'");
            s.outcomes.push_back(*o);
        }
        if (auto problem = detail::submission_problem(s, *it->second); !problem.empty()) {
            throw ParseError(file, i + 1, problem);
        }
        if (!seen.insert(s.student_id + '\x1f' + s.task_id + '\x1f' + f[2]).second) {
            throw ParseError(file, i + 1, "duplicate (student, task, timestamp)");
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Reads `key=value` lines (midterm_date, final_date, midterm_max, final_max).
inline CourseTimeline parse_timeline_config(const std::filesystem::path& path) {
    const std::string file = path.string();
    const auto lines = text::read_lines(path);
    CourseTimeline tl;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(file, i + 1, "expected key=value");
        const std::string key(text::trim(line.substr(0, eq)));
        const std::string value(text::trim(line.substr(eq + 1)));
        if (key == "midterm_date" || key == "final_date") {
            const auto ts = parse_timestamp(value);
            if (!ts) throw ParseError(file, i + 1, "bad timestamp '" + value + "'");
            (key == "midterm_date" ? tl.midterm_date : tl.final_date) = *ts;
        } else if (key == "midterm_max" || key == "final_max") {
            const auto v = text::parse_double(value);
            if (!v) throw ParseError(file, i + 1, "bad number '" + value + "'");
            (key == "midterm_max" ? tl.midterm_max : tl.final_max) = *v;
        } else {
            throw ParseError(file, i + 1, "unknown key '" + key + "'");
        }
        seen.insert(key);
    }
    for (const char* required : {"midterm_date", "final_date"}) {
        if (!seen.contains(required)) throw ConfigError(file + ": missing " + required);
    }
    tl.validate();
    return tl;
}

inline std::string format_timeline_config(const CourseTimeline& tl) {
    return "midterm_date=" + format_timestamp(tl.midterm_date) + "\nfinal_date=" + format_timestamp(tl.final_date) +
           "\nmidterm_max=" + text::format_double(tl.midterm_max) +
           "\nfinal_max=" + text::format_double(tl.final_max) + "\n";
}

inline Dataset load_dataset(const std::filesystem::path& tasks_path, const std::filesystem::path& submissions_path,
                            const std::filesystem::path& grades_path, const CourseTimeline& timeline,
                            LoadReport* report = nullptr) {
    timeline.validate();
    auto tasks = parse_tasks_file(tasks_path);
    auto submissions = parse_submissions_file(submissions_path, tasks);
    auto grades = parse_grades_file(grades_path, timeline);
    return Dataset::create(std::move(tasks), timeline, std::move(submissions), std::move(grades), report);
}

/// Tasks due at or before `cutoff`, ordered by deadline then task_id.
inline std::vector<TaskSpec> tasks_before(const Dataset& ds, Timestamp cutoff) {
    std::vector<TaskSpec> out;
    for (const auto& t : ds.tasks()) {
        if (t.deadline <= cutoff) out.push_back(t);
    }
    std::sort(out.begin(), out.end(), [](const TaskSpec& a, const TaskSpec& b) {
        return std::tie(a.deadline, a.task_id) < std::tie(b.deadline, b.task_id);
    });
    return out;
}

/// Submission with the most passed testcases; ties go to the latest one.
/// Returns nullptr when the student never submitted to the task.
inline const SubmissionRecord* best_submission(const Dataset& ds, std::string_view student_id,
                                               std::string_view task_id) {
    const SubmissionRecord* best = nullptr;
    std::size_t best_passed = 0;
    for (const auto* s : ds.submissions_for(student_id, task_id)) {
        const auto passed = s->passed_count();
        if (!best || passed > best_passed || (passed == best_passed && s->submitted_at >= best->submitted_at)) {
            best = s;
            best_passed = passed;
        }
    }
    return best;
}

}  // namespace subperf
