#pragma once

// CART regression trees. Exact split search with variance-reduction gain;
// ties are broken toward the lowest feature index, then the lowest
// threshold, so identical inputs always give identical trees. The node
// layout doubles as the serialization schema and is shared with the
// histogram trees grown by the boosting module.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "evtwin/features.hpp"
#include "evtwin/rng.hpp"

namespace evtwin {

struct TreeNode {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct CartParams {
    int max_depth = 16;       // 0 = unlimited
    int min_samples_leaf = 1;
    int feature_subsample = 0;  // candidate features per split; 0 = all
};

class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    static RegressionTree fit(const Matrix& X, const std::vector<double>& y,
                              const std::vector<std::size_t>& sample_indices,
                              const CartParams& params, Rng& rng) {
        if (X.empty() || y.size() != X.size()) throw std::invalid_argument("bad training data");
        if (sample_indices.empty()) throw std::invalid_argument("no training samples for tree");
        if (params.max_depth < 0 || params.min_samples_leaf < 1)
            throw std::invalid_argument("invalid tree hyperparameters");
        RegressionTree t;
        std::vector<std::size_t> idx = sample_indices;
        t.build(X, y, idx, 0, idx.size(), 0, params, rng);
        return t;
    }

    double predict(const std::vector<double>& row) const {
        if (nodes_.empty()) throw std::logic_error("predict on empty tree");
        int node = 0;
        while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
            const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
            if (static_cast<std::size_t>(n.feature) >= row.size())
                throw std::invalid_argument("feature dimension mismatch in tree predict");
            node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(node)].leaf_value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& mutable_nodes() { return nodes_; }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const TreeNode& n : nodes_) {
            if (n.feature < 0)
                arr.push_back({{"feature", -1}, {"leaf_value", n.leaf_value}});
            else
                arr.push_back({{"feature", n.feature},
                               {"threshold", n.threshold},
                               {"left", n.left},
                               {"right", n.right}});
        }
        return arr;
    }

    static RegressionTree from_json(const nlohmann::json& j, int n_features) {
        if (!j.is_array() || j.empty()) throw std::runtime_error("tree payload: expected node array");
        std::vector<TreeNode> nodes;
        nodes.reserve(j.size());
        const int n = static_cast<int>(j.size());
        for (const auto& nj : j) {
            TreeNode node;
            node.feature = nj.at("feature").get<int>();
            if (node.feature >= 0) {
                if (node.feature >= n_features)
                    throw std::runtime_error("tree payload: feature index out of range");
                node.threshold = nj.at("threshold").get<double>();
                node.left = nj.at("left").get<int>();
                node.right = nj.at("right").get<int>();
                if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)
                    throw std::runtime_error("tree payload: child index out of range");
            } else {
                node.leaf_value = nj.at("leaf_value").get<double>();
            }
            nodes.push_back(node);
        }
        return RegressionTree(std::move(nodes));
    }

private:
    struct Split {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
    };

    // Builds the subtree over idx[begin, end); returns the node index.
    int build(const Matrix& X, const std::vector<double>& y, std::vector<std::size_t>& idx,
              std::size_t begin, std::size_t end, int depth, const CartParams& params, Rng& rng) {
        const std::size_t n = end - begin;
        double sum = 0.0;
        double y_min = y[idx[begin]], y_max = y[idx[begin]];
        for (std::size_t k = begin; k < end; ++k) {
            sum += y[idx[k]];
            y_min = std::min(y_min, y[idx[k]]);
            y_max = std::max(y_max, y[idx[k]]);
        }
        const double mean = sum / static_cast<double>(n);

        const bool depth_ok = params.max_depth == 0 || depth < params.max_depth;
        Split best;
        if (depth_ok && y_min < y_max && n >= 2 * static_cast<std::size_t>(params.min_samples_leaf))
            best = find_best_split(X, y, idx, begin, end, params, rng);

        if (best.feature < 0) {
            nodes_.push_back({-1, 0.0, -1, -1, mean});
            return static_cast<int>(nodes_.size()) - 1;
        }

        // stable partition keeps per-subset summation order deterministic
        std::vector<std::size_t> left_idx, right_idx;
        left_idx.reserve(n);
        for (std::size_t k = begin; k < end; ++k) {
            if (X[idx[k]][static_cast<std::size_t>(best.feature)] <= best.threshold)
                left_idx.push_back(idx[k]);
            else
                right_idx.push_back(idx[k]);
        }
        std::copy(left_idx.begin(), left_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(begin));
        std::copy(right_idx.begin(), right_idx.end(),
                  idx.begin() + static_cast<std::ptrdiff_t>(begin + left_idx.size()));

        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back({best.feature, best.threshold, -1, -1, 0.0});
        const std::size_t mid = begin + left_idx.size();
        int left = build(X, y, idx, begin, mid, depth + 1, params, rng);
        int right = build(X, y, idx, mid, end, depth + 1, params, rng);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    Split find_best_split(const Matrix& X, const std::vector<double>& y,
                          const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                          const CartParams& params, Rng& rng) {
        const std::size_t n = end - begin;
        const int d = static_cast<int>(X[0].size());

        std::vector<int> features;
        if (params.feature_subsample > 0 && params.feature_subsample < d) {
            std::vector<int> all(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) all[static_cast<std::size_t>(j)] = j;
            // partial Fisher-Yates, then ascending order for the tie-break rule
            for (int j = 0; j < params.feature_subsample; ++j) {
                std::size_t pick = static_cast<std::size_t>(j) +
                                   static_cast<std::size_t>(rng.bounded(
                                       static_cast<std::uint64_t>(d - j)));
                std::swap(all[static_cast<std::size_t>(j)], all[pick]);
            }
            features.assign(all.begin(), all.begin() + params.feature_subsample);
            std::sort(features.begin(), features.end());
        } else {
            for (int j = 0; j < d; ++j) features.push_back(j);
        }

        double total_sum = 0.0, total_sumsq = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            total_sum += y[idx[k]];
            total_sumsq += y[idx[k]] * y[idx[k]];
        }
        const double parent_sse = total_sumsq - total_sum * total_sum / static_cast<double>(n);

        Split best;
        std::vector<std::pair<double, double>> col(n);  // (feature value, target)
        for (int f : features) {
            for (std::size_t k = 0; k < n; ++k) {
                std::size_t i = idx[begin + k];
                col[k] = {X[i][static_cast<std::size_t>(f)], y[i]};
            }
            std::sort(col.begin(), col.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0, left_sumsq = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += col[k].second;
                left_sumsq += col[k].second * col[k].second;
                if (col[k].first == col[k + 1].first) continue;  // no boundary between ties
                const std::size_t n_left = k + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < static_cast<std::size_t>(params.min_samples_leaf) ||
                    n_right < static_cast<std::size_t>(params.min_samples_leaf))
                    continue;
                const double right_sum = total_sum - left_sum;
                const double right_sumsq = total_sumsq - left_sumsq;
                const double sse_left = left_sumsq - left_sum * left_sum / static_cast<double>(n_left);
                const double sse_right =
                    right_sumsq - right_sum * right_sum / static_cast<double>(n_right);
                const double gain = parent_sse - sse_left - sse_right;
                if (gain > best.gain) {
                    double thr = col[k].first + (col[k + 1].first - col[k].first) / 2.0;
                    if (!(thr < col[k + 1].first)) thr = col[k].first;  // adjacent-double guard
                    best = {gain, f, thr};
                }
            }
        }
        return best;
    }

    std::vector<TreeNode> nodes_;
};

}  // namespace evtwin
