#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "evtwin/forest.hpp"
#include "evtwin/regressor.hpp"
#include "evtwin/rng.hpp"

using namespace evtwin;

namespace {

// Independent brute-force CART for the oracle comparison: naive O(n^2)
// variance computation at every candidate boundary, same stopping and
// tie-break rules as the contract (strictly positive gain; lowest feature
// index, then lowest threshold).
struct OracleTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        std::unique_ptr<Node> left, right;
        double value = 0.0;
    };
    std::unique_ptr<Node> root;
    int max_depth;
    int min_leaf;

    OracleTree(const Matrix& X, const std::vector<double>& y, int max_depth_, int min_leaf_)
        : max_depth(max_depth_), min_leaf(min_leaf_) {
        std::vector<std::size_t> idx(X.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        root = build(X, y, idx, 0);
    }

    static double sse_of(const std::vector<double>& y, const std::vector<std::size_t>& idx) {
        if (idx.empty()) return 0.0;
        double mean = 0.0;
        for (auto i : idx) mean += y[i];
        mean /= static_cast<double>(idx.size());
        double sse = 0.0;
        for (auto i : idx) sse += (y[i] - mean) * (y[i] - mean);
        return sse;
    }

    std::unique_ptr<Node> build(const Matrix& X, const std::vector<double>& y,
                                const std::vector<std::size_t>& idx, int depth) {
        auto node = std::make_unique<Node>();
        double mean = 0.0;
        for (auto i : idx) mean += y[i];
        mean /= static_cast<double>(idx.size());
        node->value = mean;

        bool all_equal = true;
        for (auto i : idx)
            if (y[i] != y[idx[0]]) all_equal = false;
        if (all_equal || (max_depth != 0 && depth >= max_depth) ||
            idx.size() < 2 * static_cast<std::size_t>(min_leaf))
            return node;

        double parent_sse = sse_of(y, idx);
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        const int d = static_cast<int>(X[0].size());
        for (int f = 0; f < d; ++f) {
            std::vector<double> values;
            for (auto i : idx) values.push_back(X[i][static_cast<std::size_t>(f)]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t v = 0; v + 1 < values.size(); ++v) {
                double thr = values[v] + (values[v + 1] - values[v]) / 2.0;
                if (!(thr < values[v + 1])) thr = values[v];
                std::vector<std::size_t> li, ri;
                for (auto i : idx)
                    (X[i][static_cast<std::size_t>(f)] <= thr ? li : ri).push_back(i);
                if (li.size() < static_cast<std::size_t>(min_leaf) ||
                    ri.size() < static_cast<std::size_t>(min_leaf))
                    continue;
                double gain = parent_sse - sse_of(y, li) - sse_of(y, ri);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = thr;
                }
            }
        }
        if (best_feature < 0) return node;
        node->feature = best_feature;
        node->threshold = best_threshold;
        std::vector<std::size_t> li, ri;
        for (auto i : idx)
            (X[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? li : ri).push_back(i);
        node->left = build(X, y, li, depth + 1);
        node->right = build(X, y, ri, depth + 1);
        return node;
    }

    double predict(const std::vector<double>& row) const {
        const Node* n = root.get();
        while (n->feature >= 0)
            n = row[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left.get()
                                                                          : n->right.get();
        return n->value;
    }
};

Matrix random_matrix(Rng& rng, std::size_t n, std::size_t d) {
    Matrix X(n, std::vector<double>(d));
    for (auto& row : X)
        for (auto& v : row) v = rng.uniform(-5.0, 5.0);
    return X;
}

}  // namespace

TEST_CASE("forest on a constant target predicts the constant") {
    Rng rng(1);
    Matrix X = random_matrix(rng, 40, 4);
    std::vector<double> y(40, 42.0);
    ForestParams p;
    p.n_trees = 10;
    auto m = RandomForestModel::fit(X, y, p);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK_THAT(m.predict(X[i]), Catch::Matchers::WithinAbs(42.0, 1e-9));
}

TEST_CASE("single unrestricted tree reproduces the training targets on distinct inputs") {
    Rng rng(2);
    Matrix X = random_matrix(rng, 50, 3);
    std::vector<double> y;
    for (std::size_t i = 0; i < X.size(); ++i) y.push_back(rng.uniform(0.0, 100.0));
    ForestParams p;
    p.n_trees = 1;
    p.max_depth = 0;  // unlimited
    p.min_samples_leaf = 1;
    p.feature_subsample = 0;  // all features
    p.bootstrap = false;
    auto m = RandomForestModel::fit(X, y, p);
    for (std::size_t i = 0; i < X.size(); ++i) CHECK(m.predict(X[i]) == y[i]);
}

TEST_CASE("single tree matches the exhaustive CART oracle exactly") {
    for (std::uint64_t seed : {3, 4, 5, 6, 7}) {
        Rng rng(seed);
        std::size_t n = 20 + rng.bounded(31);  // up to ~50 rows
        Matrix X = random_matrix(rng, n, 3);
        // mixture of structure and noise, plus duplicated feature values
        std::vector<double> y;
        for (std::size_t i = 0; i < n; ++i) {
            X[i][1] = std::round(X[i][1]);  // coarse feature with ties
            y.push_back(3.0 * X[i][0] - 2.0 * X[i][1] + rng.uniform(-1.0, 1.0));
        }
        const int max_depth = 4;
        const int min_leaf = 2;

        OracleTree oracle(X, y, max_depth, min_leaf);
        ForestParams p;
        p.n_trees = 1;
        p.max_depth = max_depth;
        p.min_samples_leaf = min_leaf;
        p.feature_subsample = 0;
        p.bootstrap = false;
        p.seed = seed;
        auto m = RandomForestModel::fit(X, y, p);

        for (std::size_t i = 0; i < n; ++i) CHECK(m.predict(X[i]) == oracle.predict(X[i]));
        Rng probe(seed + 100);
        for (int q = 0; q < 200; ++q) {
            std::vector<double> row = {probe.uniform(-6.0, 6.0), probe.uniform(-6.0, 6.0),
                                       probe.uniform(-6.0, 6.0)};
            CHECK(m.predict(row) == oracle.predict(row));
        }
    }
}

TEST_CASE("forest prediction is the mean of its trees") {
    Rng rng(8);
    Matrix X = random_matrix(rng, 120, 4);
    std::vector<double> y;
    for (auto& row : X) y.push_back(row[0] * row[0] + row[2]);
    ForestParams p;
    p.n_trees = 25;
    p.max_depth = 6;
    auto m = RandomForestModel::fit(X, y, p);
    REQUIRE(m.trees().size() == 25);
    for (int q = 0; q < 50; ++q) {
        std::vector<double> row = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5),
                                   rng.uniform(-5, 5)};
        auto per_tree = m.tree_predictions(row);
        double mean = 0.0;
        for (double v : per_tree) mean += v;
        mean /= static_cast<double>(per_tree.size());
        CHECK(m.predict(row) == mean);
    }
}

TEST_CASE("forest training is deterministic in data, params and seed") {
    Rng rng(9);
    Matrix X = random_matrix(rng, 80, 4);
    std::vector<double> y;
    for (auto& row : X) y.push_back(row[1] - row[3]);
    ForestParams p;
    p.n_trees = 12;
    p.seed = 77;
    auto a = train_random_forest(X, y, p);
    auto b = train_random_forest(X, y, p);
    CHECK(serialize_model(a) == serialize_model(b));
    p.seed = 78;
    auto c = train_random_forest(X, y, p);
    CHECK(serialize_model(a) != serialize_model(c));
}

TEST_CASE("forest rejects bad inputs") {
    Matrix X = {{1.0, 2.0}};
    std::vector<double> y = {1.0};
    ForestParams p;
    p.n_trees = 0;
    CHECK_THROWS_AS(RandomForestModel::fit(X, y, p), std::invalid_argument);
    p.n_trees = 1;
    CHECK_THROWS_AS(RandomForestModel::fit({}, {}, p), std::invalid_argument);
    p.feature_subsample = 5;
    CHECK_THROWS_AS(RandomForestModel::fit(X, y, p), std::invalid_argument);
    p.feature_subsample = 0;
    Matrix bad = {{1.0, std::numeric_limits<double>::quiet_NaN()}};
    CHECK_THROWS_AS(RandomForestModel::fit(bad, y, p), std::invalid_argument);
}
