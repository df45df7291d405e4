#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "subperf/category.hpp"
#include "subperf/errors.hpp"
#include "subperf/features.hpp"
#include "subperf/stats.hpp"

namespace subperf {

/// Shannon entropy in bits of a class-count vector.
inline double entropy(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw DomainError("entropy: all counts are zero");
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

inline double entropy(const ClassCounts& counts) { return entropy(std::span<const std::size_t>(counts)); }

struct GainRatio {
    double gain = 0.0;
    double split_info = 0.0;
    double ratio = 0.0;
};

/// Information gain of partitioning `parent` into `children`, normalized by
/// the entropy of the child sizes. Ratio is 0 when split_info is 0.
inline GainRatio gain_ratio_parts(std::span<const std::size_t> parent,
                                  std::span<const std::vector<std::size_t>> children) {
    std::vector<std::size_t> sum(parent.size(), 0);
    std::vector<std::size_t> sizes;
    for (const auto& child : children) {
        if (child.size() != parent.size()) throw DomainError("gain_ratio: class arity mismatch");
        std::size_t size = 0;
        for (std::size_t c = 0; c < child.size(); ++c) {
            sum[c] += child[c];
            size += child[c];
        }
        sizes.push_back(size);
    }
    if (!std::equal(sum.begin(), sum.end(), parent.begin())) {
        throw DomainError("gain_ratio: children do not partition the parent");
    }
    const double total = static_cast<double>(std::accumulate(parent.begin(), parent.end(), std::size_t{0}));
    GainRatio r;
    double weighted = 0.0;
    for (std::size_t i = 0; i < children.size(); ++i) {
        if (sizes[i] == 0) continue;
        weighted += static_cast<double>(sizes[i]) / total * entropy(children[i]);
    }
    r.gain = entropy(parent) - weighted;
    std::vector<std::size_t> nonempty;
    for (auto s : sizes) {
        if (s > 0) nonempty.push_back(s);
    }
    r.split_info = entropy(nonempty);
    r.ratio = r.split_info > 0.0 ? r.gain / r.split_info : 0.0;
    return r;
}

inline double gain_ratio(std::span<const std::size_t> parent, std::span<const std::vector<std::size_t>> children) {
    return gain_ratio_parts(parent, children).ratio;
}

struct SplitCandidate {
    std::size_t feature = 0;
    std::string feature_name;
    double threshold = 0.0;
    double gain = 0.0;
    double ratio = 0.0;
};

namespace detail {

inline constexpr double kMinGain = 1e-12;
inline constexpr double kRatioTieTolerance = 1e-10;

inline ClassCounts count_classes(const std::vector<Category>& labels, std::span<const std::size_t> rows) {
    ClassCounts c{};
    for (auto r : rows) ++c[index_of(labels[r])];
    return c;
}

inline double entropy_from(const ClassCounts& c, std::size_t total) {
    double h = 0.0;
    for (auto k : c) {
        if (k == 0) continue;
        const double p = static_cast<double>(k) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

/// Best (feature, midpoint) over the given rows; see best_split.
inline std::optional<SplitCandidate> best_split_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    if (!m.classes) throw ConfigError("best_split requires a categorical target");
    const auto& labels = *m.classes;
    const std::size_t n = rows.size();
    if (n < 2) return std::nullopt;
    const ClassCounts parent = count_classes(labels, rows);
    const double parent_h = entropy_from(parent, n);
    if (parent_h == 0.0) return std::nullopt;

    std::vector<SplitCandidate> candidates;
    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (std::size_t f = 0; f < m.cols(); ++f) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return m.values(a, f) < m.values(b, f); });
        ClassCounts left{};
        for (std::size_t i = 0; i + 1 < n; ++i) {
            ++left[index_of(labels[order[i]])];
            const double v = m.values(order[i], f);
            const double next = m.values(order[i + 1], f);
            if (!(v < next)) continue;
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            ClassCounts right{};
            for (std::size_t c = 0; c < kCategoryCount; ++c) right[c] = parent[c] - left[c];
            const double gain = parent_h - (static_cast<double>(nl) * entropy_from(left, nl) +
                                            static_cast<double>(nr) * entropy_from(right, nr)) /
                                               static_cast<double>(n);
            if (!(gain > kMinGain)) continue;
            const double pl = static_cast<double>(nl) / static_cast<double>(n);
            const double split_info = -(pl * std::log2(pl) + (1.0 - pl) * std::log2(1.0 - pl));
            double threshold = 0.5 * (v + next);
            if (!(threshold < next)) threshold = v;
            candidates.push_back({f, m.column_names[f], threshold, gain, gain / split_info});
        }
    }
    if (candidates.empty()) return std::nullopt;
    double best = -1.0;
    for (const auto& c : candidates) best = std::max(best, c.ratio);
    // Candidates are already in (feature, ascending threshold) order.
    for (const auto& c : candidates) {
        if (c.ratio >= best - kRatioTieTolerance) return c;
    }
    return std::nullopt;
}

}  // namespace detail

/// Maximum gain-ratio binary split among midpoints of consecutive distinct
/// values, restricted to candidates with positive information gain. Ties go to
/// the earlier column, then the lower threshold. None when nothing has gain.
inline std::optional<SplitCandidate> best_split(const FeatureMatrix& node) {
    std::vector<std::size_t> rows(node.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return detail::best_split_rows(node, rows);
}

struct TreeConfig {
    std::size_t min_leaf = 2;
    double pruning_confidence = 0.25;
    bool pruning = true;

    void validate() const {
        if (min_leaf < 1) throw ConfigError("tree: min_leaf must be at least 1");
        if (!(pruning_confidence > 0.0 && pruning_confidence < 1.0)) {
            throw ConfigError("tree: pruning confidence must lie in (0, 1)");
        }
    }
};

struct TreeNode {
    bool leaf = true;
    Category label = Category::PP;  // majority class at the node
    ClassCounts counts{};           // training instances reaching the node
    std::size_t feature = 0;        // index into TreeModel::column_names
    double threshold = 0.0;
    int left = -1;  // <= threshold
    int right = -1;

    bool operator==(const TreeNode&) const = default;
};

/// Majority class; ties go to the earlier category.
inline Category majority(const ClassCounts& c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kCategoryCount; ++k) {
        if (c[k] > c[best]) best = k;
    }
    return kCategories[best];
}

/// Upper confidence bound on extra errors at a leaf with n instances and e
/// misclassifications (normal approximation to the binomial, with the usual
/// small-count corrections).
inline double pessimistic_extra_errors(double n, double e, double confidence) {
    if (e < 1.0) {
        const double base = n * (1.0 - std::pow(confidence, 1.0 / n));
        if (e == 0.0) return base;
        return base + e * (pessimistic_extra_errors(n, 1.0, confidence) - base);
    }
    if (e + 0.5 >= n) return std::max(n - e, 0.0);
    const double z = stats::normal_quantile(1.0 - confidence);
    const double f = (e + 0.5) / n;
    const double r = (f + z * z / (2.0 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) /
                     (1.0 + z * z / n);
    return r * n - e;
}

class TreeModel {
public:
    TreeModel() = default;
    TreeModel(std::vector<std::string> columns, std::vector<TreeNode> nodes)
        : columns_(std::move(columns)), nodes_(std::move(nodes)) {}

    const std::vector<std::string>& column_names() const noexcept { return columns_; }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& root() const { return nodes_.at(0); }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.leaf; }));
    }

    std::size_t depth() const { return depth_from(0); }

    /// `row` is in the training column order.
    Category predict(std::span<const double> row) const {
        if (row.size() != columns_.size()) throw PredictionError("tree: row has wrong number of features");
        int at = 0;
        while (!nodes_[static_cast<std::size_t>(at)].leaf) {
            const auto& n = nodes_[static_cast<std::size_t>(at)];
            at = row[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(at)].label;
    }

    /// Predicts every row of `m`, matching columns by name. Only features the
    /// tree actually tests must be present.
    std::vector<Category> predict(const FeatureMatrix& m) const {
        std::vector<std::optional<std::size_t>> map(columns_.size());
        for (const auto& n : nodes_) {
            if (n.leaf || map[n.feature]) continue;
            map[n.feature] = m.column_index(columns_[n.feature]);
            if (!map[n.feature]) throw PredictionError("tree: missing feature " + columns_[n.feature]);
        }
        std::vector<Category> out;
        out.reserve(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            int at = 0;
            while (!nodes_[static_cast<std::size_t>(at)].leaf) {
                const auto& n = nodes_[static_cast<std::size_t>(at)];
                at = m.values(i, *map[n.feature]) <= n.threshold ? n.left : n.right;
            }
            out.push_back(nodes_[static_cast<std::size_t>(at)].label);
        }
        return out;
    }

    /// Name-keyed prediction.
    Category predict(const std::map<std::string, double>& row) const {
        int at = 0;
        while (!nodes_[static_cast<std::size_t>(at)].leaf) {
            const auto& n = nodes_[static_cast<std::size_t>(at)];
            const auto it = row.find(columns_[n.feature]);
            if (it == row.end()) throw PredictionError("tree: missing feature " + columns_[n.feature]);
            at = it->second <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(at)].label;
    }

    nlohmann::json to_json() const {
        return {{"model", "c45"}, {"columns", columns_}, {"root", node_json(0)}};
    }

    static TreeModel from_json(const nlohmann::json& j) {
        TreeModel t;
        try {
            if (j.at("model").get<std::string>() != "c45") throw ConfigError("not a c45 model document");
            t.columns_ = j.at("columns").get<std::vector<std::string>>();
            t.read_node(j.at("root"));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("malformed tree model: ") + e.what());
        }
        return t;
    }

    bool operator==(const TreeModel&) const = default;

private:
    std::size_t depth_from(int at) const {
        const auto& n = nodes_[static_cast<std::size_t>(at)];
        if (n.leaf) return 0;
        return 1 + std::max(depth_from(n.left), depth_from(n.right));
    }

    nlohmann::json node_json(int at) const {
        const auto& n = nodes_[static_cast<std::size_t>(at)];
        nlohmann::json counts = nlohmann::json::array();
        for (auto c : n.counts) counts.push_back(c);
        if (n.leaf) return {{"class", std::string(to_string(n.label))}, {"counts", counts}};
        return {{"feature", columns_[n.feature]},
                {"threshold", n.threshold},
                {"counts", counts},
                {"left", node_json(n.left)},
                {"right", node_json(n.right)}};
    }

    int read_node(const nlohmann::json& j) {
        const int at = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        TreeNode n;
        const auto counts = j.at("counts").get<std::vector<std::size_t>>();
        if (counts.size() != kCategoryCount) throw ConfigError("tree node counts must have 3 entries");
        std::copy(counts.begin(), counts.end(), n.counts.begin());
        if (j.contains("class")) {
            const auto label = parse_category(j.at("class").get<std::string>());
            if (!label) throw ConfigError("tree node has unknown class");
            n.leaf = true;
            n.label = *label;
        } else {
            n.leaf = false;
            n.label = majority(n.counts);
            const auto name = j.at("feature").get<std::string>();
            const auto it = std::find(columns_.begin(), columns_.end(), name);
            if (it == columns_.end()) throw ConfigError("tree node tests unknown feature " + name);
            n.feature = static_cast<std::size_t>(it - columns_.begin());
            n.threshold = j.at("threshold").get<double>();
            if (!std::isfinite(n.threshold)) throw ConfigError("tree threshold must be finite");
            n.left = read_node(j.at("left"));
            n.right = read_node(j.at("right"));
        }
        nodes_[static_cast<std::size_t>(at)] = n;
        return at;
    }

    std::vector<std::string> columns_;
    std::vector<TreeNode> nodes_;
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& m, const TreeConfig& config) : m_(m), config_(config) {}

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        grow(std::move(rows));
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t> rows) {
        const int at = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        TreeNode node;
        node.counts = count_classes(*m_.classes, rows);
        node.label = majority(node.counts);
        const bool pure = std::count(node.counts.begin(), node.counts.end(), std::size_t{0}) ==
                          static_cast<std::ptrdiff_t>(kCategoryCount - 1);
        if (!pure && rows.size() >= 2 * config_.min_leaf) {
            if (auto split = best_split_rows(m_, rows)) {
                std::vector<std::size_t> left, right;
                for (auto r : rows) (m_.values(r, split->feature) <= split->threshold ? left : right).push_back(r);
                node.leaf = false;
                node.feature = split->feature;
                node.threshold = split->threshold;
                rows.clear();
                rows.shrink_to_fit();
                node.left = grow(std::move(left));
                node.right = grow(std::move(right));
            }
        }
        nodes_[static_cast<std::size_t>(at)] = node;
        return at;
    }

    const FeatureMatrix& m_;
    const TreeConfig& config_;
    std::vector<TreeNode> nodes_;
};

inline double leaf_estimate(const TreeNode& n, double confidence) {
    const double total = static_cast<double>(n.counts[0] + n.counts[1] + n.counts[2]);
    const double errors = total - static_cast<double>(n.counts[index_of(n.label)]);
    return errors + pessimistic_extra_errors(total, errors, confidence);
}

// Bottom-up subtree replacement. Returns the estimated errors of the
// (possibly collapsed) subtree rooted at `at`.
inline double prune(std::vector<TreeNode>& nodes, int at, double confidence) {
    auto& n = nodes[static_cast<std::size_t>(at)];
    if (n.leaf) return leaf_estimate(n, confidence);
    const double subtree = prune(nodes, n.left, confidence) + prune(nodes, n.right, confidence);
    auto& node = nodes[static_cast<std::size_t>(at)];
    const double as_leaf = leaf_estimate(node, confidence);
    if (as_leaf <= subtree + 0.1) {
        node.leaf = true;
        node.left = node.right = -1;
        return as_leaf;
    }
    return subtree;
}

// Drops nodes no longer reachable from the root, preserving pre-order.
inline std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
    std::vector<TreeNode> out;
    auto copy = [&](auto&& self, int at) -> int {
        const int id = static_cast<int>(out.size());
        out.push_back(nodes[static_cast<std::size_t>(at)]);
        if (!out.back().leaf) {
            const int l = self(self, nodes[static_cast<std::size_t>(at)].left);
            const int r = self(self, nodes[static_cast<std::size_t>(at)].right);
            out[static_cast<std::size_t>(id)].left = l;
            out[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    };
    copy(copy, 0);
    return out;
}

}  // namespace detail

/// Grows a tree by recursive gain-ratio splitting. A node becomes a leaf when
/// it is pure, has fewer than 2 * min_leaf rows, or has no positive-gain
/// split. Pruning (when enabled) replaces subtrees bottom-up whenever the
/// pessimistic leaf estimate does not exceed the subtree's.
inline TreeModel train_tree(const FeatureMatrix& train, const TreeConfig& config = {}) {
    config.validate();
    if (!train.classes) throw ConfigError("train_tree requires a categorical target");
    if (train.rows() == 0) throw TrainingError("train_tree: empty training set");
    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto nodes = detail::TreeBuilder(train, config).build(std::move(rows));
    if (config.pruning) {
        detail::prune(nodes, 0, config.pruning_confidence);
        nodes = detail::compact(nodes);
    }
    return TreeModel(train.column_names, std::move(nodes));
}

inline Category predict_tree(const TreeModel& model, std::span<const double> row) { return model.predict(row); }

inline std::vector<Category> predict_tree(const TreeModel& model, const FeatureMatrix& m) { return model.predict(m); }

}  // namespace subperf
