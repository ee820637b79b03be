#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/features/features.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace sentcast::predictor {

using features::FeatureVector;

/// Growth limits for a single squared-error regression tree.
struct TreeParams {
    int max_depth = 3;
    std::size_t min_samples_leaf = 20;
    double l2 = 1.0;
};

/// Binary regression tree stored as a flat node array; node 0 is the root.
class RegressionTree {
public:
    struct Node {
        int feature = -1; ///< -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;

        [[nodiscard]] bool leaf() const noexcept { return feature < 0; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    RegressionTree() = default;
    explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    [[nodiscard]] double predict(const FeatureVector& x) const {
        std::size_t i = 0;
        while (!nodes_[i].leaf()) {
            const Node& n = nodes_[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes_[i].value;
    }

    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t depth() const { return depth_from(0); }

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    [[nodiscard]] std::size_t depth_from(std::size_t i) const {
        const Node& n = nodes_[i];
        if (n.leaf()) {
            return 0;
        }
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }

    std::vector<Node> nodes_;
};

/// Row indices ordered by each feature, ties broken by row index. Computed once per
/// training matrix and shared by every tree fit on it.
class SortedColumns {
public:
    explicit SortedColumns(std::span<const FeatureVector> x) : rows_(x.size()) {
        for (std::size_t f = 0; f < FeatureVector::kCount; ++f) {
            auto& order = columns_[f];
            order.resize(x.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                double va = x[a][f];
                double vb = x[b][f];
                return va < vb || (va == vb && a < b);
            });
        }
    }

    [[nodiscard]] const std::vector<std::size_t>& operator[](std::size_t f) const { return columns_[f]; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }

private:
    std::size_t rows_;
    std::array<std::vector<std::size_t>, FeatureVector::kCount> columns_;
};

namespace detail {

class TreeGrower {
public:
    TreeGrower(std::span<const FeatureVector> x, std::span<const double> residual, const TreeParams& params)
        : x_(x), r_(residual), params_(params) {}

    /// `rows` fixes the summation order of the root; children sum in the order of the
    /// feature they were split on.
    RegressionTree grow(const std::vector<std::size_t>& rows, const SortedColumns& columns) {
        if (columns.rows() != x_.size()) {
            throw PreconditionError("sorted columns do not match the training matrix");
        }
        side_.assign(x_.size(), 0);
        for (std::size_t i : rows) {
            side_[i] = 1;
        }
        Lists lists;
        for (std::size_t f = 0; f < FeatureVector::kCount; ++f) {
            lists[f].reserve(rows.size());
            for (std::size_t i : columns[f]) {
                if (side_[i] != 0) {
                    lists[f].push_back(i);
                }
            }
        }
        nodes_.clear();
        build(lists, rows, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    using Node = RegressionTree::Node;
    using Lists = std::array<std::vector<std::size_t>, FeatureVector::kCount>;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
        std::size_t left_count = 0;
    };

    std::int32_t build(Lists& lists, const std::vector<std::size_t>& sum_order, int depth) {
        double g = 0.0;
        for (std::size_t i : sum_order) {
            g += r_[i];
        }
        const std::size_t count = lists[0].size();
        const double n = static_cast<double>(count);
        auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{-1, 0.0, -1, -1, g / (n + params_.l2)});

        if (depth >= params_.max_depth || count < 2 * std::max<std::size_t>(params_.min_samples_leaf, 1)) {
            return id;
        }
        Split best = find_split(lists, g);
        if (best.feature < 0) {
            return id;
        }
        const auto& by = lists[static_cast<std::size_t>(best.feature)];
        for (std::size_t k = 0; k < by.size(); ++k) {
            side_[by[k]] = k < best.left_count ? 1 : 2;
        }
        Lists left;
        Lists right;
        for (std::size_t f = 0; f < FeatureVector::kCount; ++f) {
            left[f].reserve(best.left_count);
            right[f].reserve(count - best.left_count);
            for (std::size_t i : lists[f]) {
                (side_[i] == 1 ? left[f] : right[f]).push_back(i);
            }
            lists[f].clear();
            lists[f].shrink_to_fit();
        }
        const auto split_feature = static_cast<std::size_t>(best.feature);
        const auto left_order = left[split_feature];
        std::int32_t l = build(left, left_order, depth + 1);
        const auto right_order = right[split_feature];
        std::int32_t r = build(right, right_order, depth + 1);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    Split find_split(const Lists& lists, double g_total) const {
        const double lambda = params_.l2;
        const std::size_t n = lists[0].size();
        const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
        const double parent = g_total * g_total / (static_cast<double>(n) + lambda);
        Split best;
        for (std::size_t fi = 0; fi < FeatureVector::kCount; ++fi) {
            const auto& rows = lists[fi];
            double gl = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                gl += r_[rows[k - 1]];
                double lo = x_[rows[k - 1]][fi];
                double hi = x_[rows[k]][fi];
                if (k < min_leaf || n - k < min_leaf || !(lo < hi)) {
                    continue;
                }
                double gr = g_total - gl;
                double nl = static_cast<double>(k);
                double nr = static_cast<double>(n - k);
                double gain = gl * gl / (nl + lambda) + gr * gr / (nr + lambda) - parent;
                if (gain > best.gain) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold < hi)) {
                        threshold = lo;
                    }
                    best = Split{static_cast<int>(fi), threshold, gain, k};
                }
            }
        }
        return best;
    }

    std::span<const FeatureVector> x_;
    std::span<const double> r_;
    TreeParams params_;
    std::vector<Node> nodes_;
    std::vector<unsigned char> side_; ///< per-row scratch: membership, then split side
};

} // namespace detail

/// Fits one tree to `residual` over the given rows. Greedy exact splits on
/// squared error with L2-shrunk leaves; ties resolve to the lowest feature index
/// and the leftmost cut, so the result depends only on the inputs.
inline RegressionTree fit_tree(std::span<const FeatureVector> x, std::span<const double> residual,
                               const std::vector<std::size_t>& rows, const TreeParams& params,
                               const SortedColumns& columns) {
    return detail::TreeGrower(x, residual, params).grow(rows, columns);
}

inline RegressionTree fit_tree(std::span<const FeatureVector> x, std::span<const double> residual,
                               const std::vector<std::size_t>& rows, const TreeParams& params) {
    return fit_tree(x, residual, rows, params, SortedColumns(x));
}

inline RegressionTree fit_tree(std::span<const FeatureVector> x, std::span<const double> residual,
                               const TreeParams& params) {
    std::vector<std::size_t> rows(x.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return fit_tree(x, residual, rows, params);
}

} // namespace sentcast::predictor
