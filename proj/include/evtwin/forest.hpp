#pragma once

// Random forest regressor: CART trees on bootstrap resamples with
// per-split feature subsampling, aggregated by the mean.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "evtwin/rng.hpp"
#include "evtwin/tree.hpp"

namespace evtwin {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 16;        // 0 = unlimited
    int min_samples_leaf = 2;
    int feature_subsample = -1;  // -1 = round(sqrt(d)), 0 = all
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

class RandomForestModel {
public:
    static RandomForestModel fit(const Matrix& X, const std::vector<double>& y,
                                 const ForestParams& params) {
        if (X.empty() || X.size() != y.size()) throw std::invalid_argument("empty training data");
        if (params.n_trees < 1 || params.max_depth < 0 || params.min_samples_leaf < 1)
            throw std::invalid_argument("invalid random forest hyperparameters");
        check_finite(X);
        const int d = static_cast<int>(X[0].size());
        int subsample = params.feature_subsample;
        if (subsample < 0) subsample = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
        if (subsample > d) throw std::invalid_argument("feature_subsample exceeds feature count");

        CartParams tree_params{params.max_depth, params.min_samples_leaf, subsample};
        RandomForestModel m;
        const std::size_t n = X.size();
        std::vector<std::size_t> identity(n);
        for (std::size_t i = 0; i < n; ++i) identity[i] = i;
        for (int t = 0; t < params.n_trees; ++t) {
            Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
            std::vector<std::size_t> indices;
            if (params.bootstrap) {
                indices.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    indices[i] = static_cast<std::size_t>(rng.bounded(n));
            } else {
                indices = identity;
            }
            m.trees_.push_back(RegressionTree::fit(X, y, indices, tree_params, rng));
        }
        return m;
    }

    double predict(const std::vector<double>& row) const {
        double sum = 0.0;
        for (const auto& t : trees_) sum += t.predict(row);
        return sum / static_cast<double>(trees_.size());
    }

    std::vector<double> tree_predictions(const std::vector<double>& row) const {
        std::vector<double> out;
        out.reserve(trees_.size());
        for (const auto& t : trees_) out.push_back(t.predict(row));
        return out;
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }

    nlohmann::json payload_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"trees", trees}};
    }

    static RandomForestModel payload_from_json(const nlohmann::json& j, int n_features) {
        if (!j.is_object() || !j.contains("trees") || !j.at("trees").is_array() ||
            j.at("trees").empty())
            throw std::runtime_error("random forest payload: expected non-empty trees array");
        RandomForestModel m;
        for (const auto& tj : j.at("trees")) m.trees_.push_back(RegressionTree::from_json(tj, n_features));
        return m;
    }

private:
    std::vector<RegressionTree> trees_;
};

}  // namespace evtwin
