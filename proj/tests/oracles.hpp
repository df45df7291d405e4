#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <optional>
#include <vector>

#include "subperf/subperf.hpp"

namespace oracle {

// Solves (X'X) b = X'y by Gaussian elimination with partial pivoting; X gets
// a leading column of ones.
inline std::vector<double> normal_equations(const subperf::FeatureMatrix& x, const std::vector<double>& y) {
    const std::size_t n = x.rows(), p = x.cols() + 1;
    auto design = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : x.values(i, j - 1); };
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            for (std::size_t i = 0; i < n; ++i) a[r][c] += design(i, r) * design(i, c);
        }
        for (std::size_t i = 0; i < n; ++i) a[r][p] += design(i, r) * y[i];
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> b(p);
    for (std::size_t r = 0; r < p; ++r) b[r] = a[r][p] / a[r][r];
    return b;
}

inline double entropy(const std::vector<double>& counts) {
    double total = 0.0, h = 0.0;
    for (double c : counts) total += c;
    for (double c : counts) {
        if (c > 0) h -= c / total * std::log(c / total) / std::log(2.0);
    }
    return h;
}

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double ratio = 0.0;
};

// Tries every (feature, midpoint) pair on `rows` and keeps the highest gain
// ratio with positive gain; ties keep the earlier feature, then the lower
// threshold.
inline std::optional<Split> best_split(const subperf::FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    std::vector<double> parent(3, 0.0);
    for (auto r : rows) parent[subperf::index_of((*m.classes)[r])] += 1;
    const double h = entropy(parent);
    const double n = static_cast<double>(rows.size());
    std::optional<Split> best;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        std::vector<double> vals;
        for (auto r : rows) vals.push_back(m.values(r, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            const double t = (vals[k] + vals[k + 1]) / 2.0;
            std::vector<double> l(3, 0.0), g(3, 0.0);
            for (auto r : rows) (m.values(r, f) <= t ? l : g)[subperf::index_of((*m.classes)[r])] += 1;
            double nl = 0, ng = 0;
            for (int c = 0; c < 3; ++c) {
                nl += l[c];
                ng += g[c];
            }
            const double gain = h - nl / n * entropy(l) - ng / n * entropy(g);
            const double si = entropy({nl, ng});
            if (!(gain > 1e-12) || !(si > 0)) continue;
            const double ratio = gain / si;
            if (!best || ratio > best->ratio + 1e-10) best = Split{f, t, ratio};
        }
    }
    return best;
}

}  // namespace oracle
