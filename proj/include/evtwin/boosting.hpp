#pragma once

// Gradient-boosted regression trees in the LightGBM style: stagewise
// least-squares boosting where each stage tree is grown leaf-wise (always
// split the leaf with the largest gain) over histogram-binned features.
// Bin edges are equal-frequency quantiles computed once before boosting;
// stored splits use the raw-value edge thresholds, so a serialized stage
// is an ordinary threshold tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "evtwin/tree.hpp"

namespace evtwin {

struct BoostParams {
    int n_iterations = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int max_depth = 8;  // 0 = unlimited
    int n_bins = 64;
    int min_samples_leaf = 20;
    std::uint64_t seed = 0;
};

namespace detail {

// Equal-frequency bin edges per feature; edge values act as split
// thresholds (x <= edge goes left). bin(x) = count of edges < x, so the
// bin comparison used during training and the threshold comparison used
// at predict time agree exactly.
inline std::vector<std::vector<double>> quantile_bin_edges(const Matrix& X, int n_bins) {
    const std::size_t d = X[0].size();
    const std::size_t n = X.size();
    std::vector<std::vector<double>> edges(d);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = X[i][j];
        std::sort(col.begin(), col.end());
        auto& e = edges[j];
        std::vector<double> distinct(col);
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
            // few distinct values: one bin per value
            for (std::size_t v = 0; v + 1 < distinct.size(); ++v) {
                double edge = distinct[v] + (distinct[v + 1] - distinct[v]) / 2.0;
                if (!(edge < distinct[v + 1])) edge = distinct[v];
                e.push_back(edge);
            }
            continue;
        }
        for (int b = 1; b < n_bins; ++b) {
            std::size_t pos = (static_cast<std::size_t>(b) * n) / static_cast<std::size_t>(n_bins);
            if (pos == 0 || pos >= n) continue;
            double lo = col[pos - 1], hi = col[pos];
            if (!(lo < hi)) continue;
            double edge = lo + (hi - lo) / 2.0;
            if (!(edge < hi)) edge = lo;  // adjacent-double guard
            if (e.empty() || edge > e.back()) e.push_back(edge);
        }
    }
    return edges;
}

inline std::uint16_t bin_of(const std::vector<double>& edges, double x) {
    return static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), x) -
                                      edges.begin());
}

}  // namespace detail

class GradientBoostedModel {
public:
    static GradientBoostedModel fit(const Matrix& X, const std::vector<double>& y,
                                    const BoostParams& params) {
        if (X.empty() || X.size() != y.size()) throw std::invalid_argument("empty training data");
        if (params.n_iterations < 0 || params.n_bins < 2 || params.max_leaves < 2 ||
            params.max_depth < 0 || params.min_samples_leaf < 1 ||
            !(params.learning_rate > 0.0))
            throw std::invalid_argument("invalid gradient boosting hyperparameters");
        check_finite(X);

        GradientBoostedModel m;
        m.learning_rate_ = params.learning_rate;
        double sum = 0.0;
        for (double v : y) sum += v;
        m.base_prediction_ = sum / static_cast<double>(y.size());
        if (params.n_iterations == 0) return m;

        const std::size_t n = X.size();
        const std::size_t d = X[0].size();
        auto edges = detail::quantile_bin_edges(X, params.n_bins);
        // per-sample bin index, feature-major
        std::vector<std::vector<std::uint16_t>> bins(d, std::vector<std::uint16_t>(n));
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 0; i < n; ++i) bins[j][i] = detail::bin_of(edges[j], X[i][j]);

        std::vector<double> residual(n);
        std::vector<double> pred(n, m.base_prediction_);
        for (int it = 0; it < params.n_iterations; ++it) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
            std::vector<double> tree_out;
            RegressionTree tree = grow_tree(bins, edges, residual, params, tree_out);
            for (std::size_t i = 0; i < n; ++i) pred[i] += params.learning_rate * tree_out[i];
            m.stages_.push_back(std::move(tree));
        }
        return m;
    }

    double predict(const std::vector<double>& row) const {
        return predict_prefix(row, stages_.size());
    }

    // prediction using only the first n_stages stage trees
    double predict_prefix(const std::vector<double>& row, std::size_t n_stages) const {
        if (n_stages > stages_.size()) throw std::invalid_argument("stage count out of range");
        double out = base_prediction_;
        for (std::size_t s = 0; s < n_stages; ++s)
            out += learning_rate_ * stages_[s].predict(row);
        return out;
    }

    std::size_t n_stages() const { return stages_.size(); }
    double base_prediction() const { return base_prediction_; }

    nlohmann::json payload_json() const {
        nlohmann::json stages = nlohmann::json::array();
        for (const auto& t : stages_) stages.push_back(t.to_json());
        return {{"base_prediction", base_prediction_},
                {"learning_rate", learning_rate_},
                {"stages", stages}};
    }

    static GradientBoostedModel payload_from_json(const nlohmann::json& j, int n_features) {
        if (!j.is_object() || !j.contains("base_prediction") || !j.contains("stages") ||
            !j.at("stages").is_array())
            throw std::runtime_error("boosted payload: expected base_prediction and stages");
        GradientBoostedModel m;
        m.base_prediction_ = j.at("base_prediction").get<double>();
        m.learning_rate_ = j.at("learning_rate").get<double>();
        for (const auto& tj : j.at("stages")) m.stages_.push_back(RegressionTree::from_json(tj, n_features));
        return m;
    }

private:
    // One leaf of the tree under construction.
    struct Leaf {
        int node_id = -1;
        int depth = 0;
        std::vector<std::size_t> samples;
        double sum = 0.0;
        // cached best split
        double gain = 0.0;
        int feature = -1;
        std::uint16_t bin = 0;
    };

    static void find_leaf_split(Leaf& leaf, const std::vector<std::vector<std::uint16_t>>& bins,
                                const std::vector<std::vector<double>>& edges,
                                const std::vector<double>& residual, const BoostParams& params) {
        leaf.gain = 0.0;
        leaf.feature = -1;
        if (params.max_depth != 0 && leaf.depth >= params.max_depth) return;
        const std::size_t n = leaf.samples.size();
        if (n < 2 * static_cast<std::size_t>(params.min_samples_leaf)) return;
        const double total_sum = leaf.sum;
        const double parent_score = total_sum * total_sum / static_cast<double>(n);
        const std::size_t d = bins.size();
        std::vector<double> hist_sum;
        std::vector<std::size_t> hist_count;
        for (std::size_t f = 0; f < d; ++f) {
            const std::size_t nb = edges[f].size() + 1;
            if (nb < 2) continue;
            hist_sum.assign(nb, 0.0);
            hist_count.assign(nb, 0);
            for (std::size_t i : leaf.samples) {
                std::uint16_t b = bins[f][i];
                hist_sum[b] += residual[i];
                hist_count[b] += 1;
            }
            double left_sum = 0.0;
            std::size_t left_count = 0;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                left_sum += hist_sum[b];
                left_count += hist_count[b];
                if (left_count < static_cast<std::size_t>(params.min_samples_leaf)) continue;
                const std::size_t right_count = n - left_count;
                if (right_count < static_cast<std::size_t>(params.min_samples_leaf)) break;
                const double right_sum = total_sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(left_count) +
                                    right_sum * right_sum / static_cast<double>(right_count) -
                                    parent_score;
                if (gain > leaf.gain) {
                    leaf.gain = gain;
                    leaf.feature = static_cast<int>(f);
                    leaf.bin = static_cast<std::uint16_t>(b);
                }
            }
        }
    }

    static RegressionTree grow_tree(const std::vector<std::vector<std::uint16_t>>& bins,
                                    const std::vector<std::vector<double>>& edges,
                                    const std::vector<double>& residual, const BoostParams& params,
                                    std::vector<double>& train_out) {
        const std::size_t n = residual.size();
        std::vector<TreeNode> nodes;
        std::vector<Leaf> leaves;

        Leaf root;
        root.node_id = 0;
        root.depth = 0;
        root.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) root.samples[i] = i;
        for (std::size_t i = 0; i < n; ++i) root.sum += residual[i];
        nodes.push_back({-1, 0.0, -1, -1, 0.0});
        find_leaf_split(root, bins, edges, residual, params);
        leaves.push_back(std::move(root));

        while (static_cast<int>(leaves.size()) < params.max_leaves) {
            // leaf with the best gain; earliest created wins ties
            std::size_t best = leaves.size();
            for (std::size_t l = 0; l < leaves.size(); ++l)
                if (leaves[l].feature >= 0 &&
                    (best == leaves.size() || leaves[l].gain > leaves[best].gain))
                    best = l;
            if (best == leaves.size()) break;

            Leaf parent = std::move(leaves[best]);
            Leaf left, right;
            left.depth = right.depth = parent.depth + 1;
            for (std::size_t i : parent.samples) {
                if (bins[static_cast<std::size_t>(parent.feature)][i] <= parent.bin) {
                    left.samples.push_back(i);
                    left.sum += residual[i];
                } else {
                    right.samples.push_back(i);
                }
            }
            right.sum = parent.sum - left.sum;

            left.node_id = static_cast<int>(nodes.size());
            nodes.push_back({-1, 0.0, -1, -1, 0.0});
            right.node_id = static_cast<int>(nodes.size());
            nodes.push_back({-1, 0.0, -1, -1, 0.0});
            TreeNode& split_node = nodes[static_cast<std::size_t>(parent.node_id)];
            split_node.feature = parent.feature;
            split_node.threshold = edges[static_cast<std::size_t>(parent.feature)][parent.bin];
            split_node.left = left.node_id;
            split_node.right = right.node_id;

            find_leaf_split(left, bins, edges, residual, params);
            find_leaf_split(right, bins, edges, residual, params);
            leaves[best] = std::move(left);
            leaves.push_back(std::move(right));
        }

        train_out.assign(n, 0.0);
        for (const Leaf& leaf : leaves) {
            const double value =
                leaf.samples.empty() ? 0.0 : leaf.sum / static_cast<double>(leaf.samples.size());
            nodes[static_cast<std::size_t>(leaf.node_id)].leaf_value = value;
            for (std::size_t i : leaf.samples) train_out[i] = value;
        }
        return RegressionTree(std::move(nodes));
    }

    double base_prediction_ = 0.0;
    double learning_rate_ = 0.1;
    std::vector<RegressionTree> stages_;
};

}  // namespace evtwin
