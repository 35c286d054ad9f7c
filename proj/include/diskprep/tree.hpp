#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "core.hpp"

namespace diskprep {

/// Axis-aligned binary tree. Internal nodes send rows with
/// `x[feature] <= threshold` left; leaves carry `value`.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i].value;
    }
    bool operator==(const DecisionTree&) const = default;
};

/// Column-major copy of the training rows with one ascending order per feature
/// (ties by row index). Shared by every tree grown on the same rows.
class PresortedColumns {
public:
    PresortedColumns(std::span<const double> row_major, std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols), order_(cols) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) values_[c * rows + r] = row_major[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
            auto& o = order_[c];
            o.resize(rows);
            std::iota(o.begin(), o.end(), 0U);
            const double* col = &values_[c * rows];
            std::stable_sort(o.begin(), o.end(), [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t row, std::size_t col) const noexcept { return values_[col * rows_ + row]; }
    const std::vector<std::uint32_t>& order(std::size_t col) const noexcept { return order_[col]; }

private:
    std::size_t rows_, cols_;
    std::vector<double> values_;
    std::vector<std::vector<std::uint32_t>> order_;
};

/// Per-row statistics a split criterion accumulates.
struct SplitStats {
    double a = 0;  ///< GBDT: gradient sum;  RF: weighted positives
    double b = 0;  ///< GBDT: hessian sum;   RF: total weight
    void add(const SplitStats& o) noexcept {
        a += o.a;
        b += o.b;
    }
    SplitStats minus(const SplitStats& o) const noexcept { return {a - o.a, b - o.b}; }
};

/// Criterion interface used by grow_tree:
///   double score(const SplitStats&) const;   node quality, larger is better
///   bool admissible(const SplitStats&) const; child large enough
///   double leaf(const SplitStats&) const;    leaf value
///   double min_gain() const;
struct NewtonCriterion {
    double lambda = 1.0;
    double min_child_weight = 1.0;
    double gamma = 0.0;
    double learning_rate = 0.1;

    double score(const SplitStats& s) const noexcept { return s.a * s.a / (s.b + lambda); }
    bool admissible(const SplitStats& s) const noexcept { return s.b >= min_child_weight; }
    double leaf(const SplitStats& s) const noexcept { return -learning_rate * s.a / (s.b + lambda); }
    double min_gain() const noexcept { return gamma; }
};

struct GiniCriterion {
    double min_leaf_weight = 1.0;

    /// Negative weighted Gini impurity, so that larger is better.
    double score(const SplitStats& s) const noexcept {
        if (s.b <= 0) return 0;
        const double p = s.a / s.b;
        return -s.b * 2.0 * p * (1.0 - p);
    }
    bool admissible(const SplitStats& s) const noexcept { return s.b >= min_leaf_weight; }
    double leaf(const SplitStats& s) const noexcept { return s.b > 0 ? s.a / s.b : 0.0; }
    double min_gain() const noexcept { return 1e-12; }
};

struct GrowOptions {
    int max_depth = 6;
    std::size_t features_per_node = 0;  ///< 0 = all features
    std::uint64_t seed = 0;             ///< feature subsampling stream
};

/// Grows one tree level by level with exact greedy split search.
///
/// Rows with zero weight (`row_stats[r].b == 0` for Gini, or listed as
/// inactive) never reach a node. Ties between equal gains resolve to the
/// lowest feature index, then the lowest threshold, so the result depends
/// only on the data and the seed.
template <class Criterion>
DecisionTree grow_tree(const PresortedColumns& X, std::span<const SplitStats> row_stats,
                       std::span<const std::uint8_t> active, const Criterion& crit, const GrowOptions& opt) {
    const std::size_t n = X.rows(), F = X.cols();
    constexpr std::uint32_t kNone = static_cast<std::uint32_t>(-1);
    DecisionTree tree;
    std::vector<std::uint32_t> node_of(n, kNone);
    SplitStats root;
    for (std::size_t r = 0; r < n; ++r) {
        if (!active[r]) continue;
        node_of[r] = 0;
        root.add(row_stats[r]);
    }
    tree.nodes.push_back({});
    tree.nodes[0].value = crit.leaf(root);

    std::mt19937_64 rng(opt.seed);
    std::vector<std::uint32_t> frontier{0};   // node ids being split at this depth
    std::vector<SplitStats> totals{root};     // parallel to frontier
    std::vector<std::uint32_t> slot_of(1, 0); // node id -> frontier slot (kNone if not in frontier)

    struct Best {
        double gain = 0;
        std::int32_t feature = -1;
        double threshold = 0;
        SplitStats left;
    };
    std::vector<std::uint8_t> allowed;
    std::vector<std::uint32_t> feature_pool(F);
    std::iota(feature_pool.begin(), feature_pool.end(), 0U);

    for (int depth = 0; depth < opt.max_depth && !frontier.empty(); ++depth) {
        const std::size_t K = frontier.size();
        // Feature subsets per frontier node.
        const bool subsample = opt.features_per_node > 0 && opt.features_per_node < F;
        allowed.assign(subsample ? K * F : 0, 0);
        std::vector<std::uint8_t> feature_used(F, subsample ? 0 : 1);
        if (subsample) {
            for (std::size_t k = 0; k < K; ++k) {
                // Partial Fisher-Yates over the feature pool.
                for (std::size_t i = 0; i < opt.features_per_node; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, F - 1);
                    std::swap(feature_pool[i], feature_pool[pick(rng)]);
                    allowed[k * F + feature_pool[i]] = 1;
                    feature_used[feature_pool[i]] = 1;
                }
            }
        }
        std::vector<Best> best(K);
        std::vector<double> parent_score(K);
        for (std::size_t k = 0; k < K; ++k) parent_score[k] = crit.score(totals[k]);

        std::vector<SplitStats> left(K);
        std::vector<double> last_value(K);
        std::vector<std::uint8_t> seen(K);
        for (std::size_t f = 0; f < F; ++f) {
            if (!feature_used[f]) continue;
            std::fill(left.begin(), left.end(), SplitStats{});
            std::fill(seen.begin(), seen.end(), 0);
            for (std::uint32_t r : X.order(f)) {
                const std::uint32_t node = node_of[r];
                if (node == kNone) continue;
                const std::uint32_t k = slot_of[node];
                if (k == kNone) continue;
                if (subsample && !allowed[k * F + f]) continue;
                const double v = X.at(r, f);
                if (seen[k] && v > last_value[k]) {
                    const SplitStats right = totals[k].minus(left[k]);
                    if (crit.admissible(left[k]) && crit.admissible(right)) {
                        const double gain = crit.score(left[k]) + crit.score(right) - parent_score[k];
                        if (gain > crit.min_gain() && gain > best[k].gain) {
                            const double mid = last_value[k] + (v - last_value[k]) / 2;
                            best[k] = {gain, static_cast<std::int32_t>(f), mid < v ? mid : last_value[k], left[k]};
                        }
                    }
                }
                left[k].add(row_stats[r]);
                last_value[k] = v;
                seen[k] = 1;
            }
        }

        // Materialize children.
        std::vector<std::uint32_t> next_frontier;
        std::vector<SplitStats> next_totals;
        for (std::size_t k = 0; k < K; ++k) {
            const std::uint32_t id = frontier[k];
            slot_of[id] = kNone;
            if (best[k].feature < 0) continue;
            const auto l = static_cast<std::uint32_t>(tree.nodes.size());
            const SplitStats ls = best[k].left, rs = totals[k].minus(ls);
            tree.nodes.push_back({-1, 0, -1, -1, crit.leaf(ls)});
            tree.nodes.push_back({-1, 0, -1, -1, crit.leaf(rs)});
            auto& node = tree.nodes[id];
            node.feature = best[k].feature;
            node.threshold = best[k].threshold;
            node.left = static_cast<std::int32_t>(l);
            node.right = static_cast<std::int32_t>(l + 1);
            next_frontier.push_back(l);
            next_totals.push_back(ls);
            next_frontier.push_back(l + 1);
            next_totals.push_back(rs);
        }
        slot_of.resize(tree.nodes.size(), kNone);
        for (std::size_t k = 0; k < next_frontier.size(); ++k) slot_of[next_frontier[k]] = static_cast<std::uint32_t>(k);
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint32_t node = node_of[r];
            if (node == kNone) continue;
            const auto& nd = tree.nodes[node];
            if (nd.is_leaf()) {
                node_of[r] = kNone;  // settled in a leaf
                continue;
            }
            node_of[r] = static_cast<std::uint32_t>(
                X.at(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right);
        }
        frontier = std::move(next_frontier);
        totals = std::move(next_totals);
    }
    return tree;
}

} // namespace diskprep
