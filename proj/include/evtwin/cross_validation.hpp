#pragma once

// k-fold cross-validation: deterministic shuffled split, per-fold
// train/evaluate, aggregate = mean of fold metrics. Scalers are refit on
// each training split so no information leaks from the held-out fold.

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evtwin/regressor.hpp"
#include "evtwin/rng.hpp"

namespace evtwin {

struct CvResult {
    std::vector<EvalReport> fold_reports;
    EvalReport aggregate;

    nlohmann::json to_json() const {
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& f : fold_reports) folds.push_back(f.to_json());
        return {{"folds", folds}, {"aggregate", aggregate.to_json()}};
    }
};

inline CvResult kfold_cv(const Matrix& X, const std::vector<double>& y, int k,
                         const LearnerConfig& learner, bool scale_features, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k-fold requires k >= 2");
    if (X.size() != y.size()) throw std::invalid_argument("feature/target length mismatch");
    if (static_cast<std::size_t>(k) > X.size())
        throw std::invalid_argument("k exceeds number of samples");

    const std::size_t n = X.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0xF01D));
    rng.shuffle(order);

    CvResult result;
    std::size_t start = 0;
    for (int fold = 0; fold < k; ++fold) {
        const std::size_t size = n / static_cast<std::size_t>(k) +
                                 (static_cast<std::size_t>(fold) < n % static_cast<std::size_t>(k) ? 1 : 0);
        const std::size_t stop = start + size;
        Matrix X_train, X_test;
        std::vector<double> y_train, y_test;
        for (std::size_t p = 0; p < n; ++p) {
            if (p >= start && p < stop) {
                X_test.push_back(X[order[p]]);
                y_test.push_back(y[order[p]]);
            } else {
                X_train.push_back(X[order[p]]);
                y_train.push_back(y[order[p]]);
            }
        }
        auto t0 = std::chrono::steady_clock::now();
        Regressor m = train_regressor(learner, X_train, y_train, scale_features,
                                      mix_seed(seed, 1000 + static_cast<std::uint64_t>(fold)));
        auto t1 = std::chrono::steady_clock::now();
        EvalReport r = evaluate(m, X_test, y_test);
        r.train_time_s = std::chrono::duration<double>(t1 - t0).count();
        result.fold_reports.push_back(r);
        start = stop;
    }

    EvalReport& agg = result.aggregate;
    for (const auto& f : result.fold_reports) {
        agg.rmse_pct += f.rmse_pct;
        agg.mse_pct2 += f.mse_pct2;
        agg.mae_pct += f.mae_pct;
        agg.max_err_pct += f.max_err_pct;
        agg.train_time_s += f.train_time_s;
        agg.infer_time_s += f.infer_time_s;
    }
    const double inv = 1.0 / static_cast<double>(k);
    agg.rmse_pct *= inv;
    agg.mse_pct2 *= inv;
    agg.mae_pct *= inv;
    agg.max_err_pct *= inv;
    agg.train_time_s *= inv;
    agg.infer_time_s *= inv;
    return result;
}

}  // namespace evtwin
