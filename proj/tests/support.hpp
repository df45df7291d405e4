#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "subperf/subperf.hpp"

namespace testing_support {

inline subperf::Timestamp ts(const char* s) { return *subperf::parse_timestamp(s); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("subperf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write(const std::filesystem::path& p, const std::string& body) {
    std::ofstream(p, std::ios::binary) << body;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline subperf::CourseTimeline small_timeline() {
    return {ts("2016-10-26T18:00:00Z"), ts("2016-12-12T18:00:00Z"), 110.0, 120.0};
}

// Two pre-midterm tasks (4 testcases each) and one post-midterm task.
inline std::vector<subperf::TaskSpec> small_tasks() {
    return {{"t1", "a1", ts("2016-10-01T18:00:00Z"), {"c1", "c2", "c3", "c4"}},
            {"t2", "a1", ts("2016-10-01T18:00:00Z"), {"c1", "c2", "c3", "c4"}},
            {"t3", "a2", ts("2016-11-20T18:00:00Z"), {"c1", "c2"}}};
}

inline std::vector<subperf::Outcome> outcomes(const std::string& s) {
    std::vector<subperf::Outcome> out;
    for (char c : s) out.push_back(*subperf::parse_outcome(c));
    return out;
}

inline subperf::SubmissionRecord sub(const std::string& student, const std::string& task, const char* when,
                                     const std::string& outs) {
    return {student, task, ts(when), outcomes(outs)};
}

inline subperf::Dataset small_dataset() {
    using subperf::GradeRecord;
    std::vector<subperf::SubmissionRecord> subs{
        sub("s1", "t1", "2016-09-29T18:00:00Z", "PFFF"),
        sub("s1", "t1", "2016-09-30T06:00:00Z", "PPPF"),  // 36 h early, 75%
        sub("s1", "t1", "2016-10-01T12:00:00Z", "PPPP"),
        sub("s1", "t2", "2016-10-02T18:00:00Z", "PPPP"),  // late
        sub("s2", "t1", "2016-10-01T17:30:00Z", "CCCC"),
        sub("s2", "t2", "2016-09-30T18:00:00Z", "PPFF"),
        sub("s3", "t3", "2016-11-19T18:00:00Z", "PP"),
    };
    std::vector<GradeRecord> grades{{"s1", 95.0, 100.0}, {"s2", 30.0, 40.0}, {"s3", 60.0, 70.0}, {"s4", 70.0, {}}};
    return subperf::Dataset::create(small_tasks(), small_timeline(), subs, grades);
}

}  // namespace testing_support
