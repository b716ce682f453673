#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace evtwin {

// Error metrics on the percent scale, plus wall-clock fields filled in by
// whoever ran the training/inference. rmse_pct and mse_pct2 are both
// reported deliberately: published tables in this problem area are
// ambiguous about which one their "RMSE" column holds.
struct EvalReport {
    double rmse_pct = 0.0;
    double mse_pct2 = 0.0;
    double mae_pct = 0.0;
    double max_err_pct = 0.0;
    double train_time_s = 0.0;
    double infer_time_s = 0.0;

    nlohmann::json to_json() const {
        return {{"rmse_pct", rmse_pct},       {"mse_pct2", mse_pct2},
                {"mae_pct", mae_pct},         {"max_err_pct", max_err_pct},
                {"train_time_s", train_time_s}, {"infer_time_s", infer_time_s}};
    }

    static EvalReport from_json(const nlohmann::json& j) {
        EvalReport r;
        r.rmse_pct = j.at("rmse_pct").get<double>();
        r.mse_pct2 = j.at("mse_pct2").get<double>();
        r.mae_pct = j.at("mae_pct").get<double>();
        r.max_err_pct = j.at("max_err_pct").get<double>();
        r.train_time_s = j.value("train_time_s", 0.0);
        r.infer_time_s = j.value("infer_time_s", 0.0);
        return r;
    }
};

inline EvalReport compute_metrics(const std::vector<double>& predicted,
                                  const std::vector<double>& truth) {
    if (predicted.empty()) throw std::invalid_argument("cannot evaluate on empty input");
    if (predicted.size() != truth.size())
        throw std::invalid_argument("prediction/truth length mismatch");
    double sum_sq = 0.0, sum_abs = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double e = predicted[i] - truth[i];
        sum_sq += e * e;
        sum_abs += std::abs(e);
        max_abs = std::max(max_abs, std::abs(e));
    }
    EvalReport r;
    const double n = static_cast<double>(predicted.size());
    r.mse_pct2 = sum_sq / n;
    r.rmse_pct = std::sqrt(r.mse_pct2);
    r.mae_pct = sum_abs / n;
    r.max_err_pct = max_abs;
    // mathematically forced; a violation means non-finite predictions leaked in
    if (!(r.rmse_pct >= r.mae_pct - 1e-12) || !(r.max_err_pct >= r.mae_pct - 1e-12) ||
        !std::isfinite(r.rmse_pct) || !std::isfinite(r.mae_pct))
        throw std::logic_error("metric invariant violated (non-finite predictions?)");
    return r;
}

}  // namespace evtwin
