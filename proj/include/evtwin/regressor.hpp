#pragma once

// Unified regressor contract over the three learners, plus the versioned
// JSON model artifact that travels between cloud and edge:
//   {schema_version, kind, hyperparameters, trained_at_soh, version, seed,
//    scaler{min[],max[]}, payload}
// Deserialized models produce bit-identical predictions.

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "evtwin/boosting.hpp"
#include "evtwin/features.hpp"
#include "evtwin/forest.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/mlp.hpp"

namespace evtwin {

inline constexpr int kModelSchemaVersion = 1;

enum class LearnerKind { random_forest, gradient_boosted, mlp };

inline const char* to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::random_forest: return "random_forest";
        case LearnerKind::gradient_boosted: return "gradient_boosted";
        case LearnerKind::mlp: return "mlp";
    }
    throw std::logic_error("unknown learner kind");
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "random_forest" || s == "rf") return LearnerKind::random_forest;
    if (s == "gradient_boosted" || s == "gbt" || s == "lgb") return LearnerKind::gradient_boosted;
    if (s == "mlp" || s == "dnn") return LearnerKind::mlp;
    throw std::invalid_argument("unknown learner kind: " + s);
}

namespace detail {

template <typename T>
void take(nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        out = it->get<T>();
        j.erase(it);
    }
}

inline void reject_leftover(const nlohmann::json& j, const char* what) {
    if (!j.empty())
        throw std::invalid_argument(std::string("unknown ") + what +
                                    " hyperparameter: " + j.begin().key());
}

}  // namespace detail

inline ForestParams forest_params_from_json(nlohmann::json j, std::uint64_t default_seed) {
    ForestParams p;
    p.seed = default_seed;
    detail::take(j, "n_trees", p.n_trees);
    detail::take(j, "max_depth", p.max_depth);
    detail::take(j, "min_samples_leaf", p.min_samples_leaf);
    detail::take(j, "feature_subsample", p.feature_subsample);
    detail::take(j, "bootstrap", p.bootstrap);
    detail::take(j, "seed", p.seed);
    detail::reject_leftover(j, "random_forest");
    return p;
}

inline nlohmann::json to_json(const ForestParams& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"min_samples_leaf", p.min_samples_leaf},
            {"feature_subsample", p.feature_subsample},
            {"bootstrap", p.bootstrap},
            {"seed", p.seed}};
}

inline BoostParams boost_params_from_json(nlohmann::json j, std::uint64_t default_seed) {
    BoostParams p;
    p.seed = default_seed;
    detail::take(j, "n_iterations", p.n_iterations);
    detail::take(j, "learning_rate", p.learning_rate);
    detail::take(j, "max_leaves", p.max_leaves);
    detail::take(j, "max_depth", p.max_depth);
    detail::take(j, "n_bins", p.n_bins);
    detail::take(j, "min_samples_leaf", p.min_samples_leaf);
    detail::take(j, "seed", p.seed);
    detail::reject_leftover(j, "gradient_boosted");
    return p;
}

inline nlohmann::json to_json(const BoostParams& p) {
    return {{"n_iterations", p.n_iterations}, {"learning_rate", p.learning_rate},
            {"max_leaves", p.max_leaves},     {"max_depth", p.max_depth},
            {"n_bins", p.n_bins},             {"min_samples_leaf", p.min_samples_leaf},
            {"seed", p.seed}};
}

inline MlpParams mlp_params_from_json(nlohmann::json j, std::uint64_t default_seed) {
    MlpParams p;
    p.seed = default_seed;
    detail::take(j, "hidden_layers", p.hidden_layers);
    detail::take(j, "hidden_width", p.hidden_width);
    detail::take(j, "epochs", p.epochs);
    detail::take(j, "batch_size", p.batch_size);
    detail::take(j, "learning_rate", p.learning_rate);
    detail::take(j, "seed", p.seed);
    detail::reject_leftover(j, "mlp");
    return p;
}

inline nlohmann::json to_json(const MlpParams& p) {
    return {{"hidden_layers", p.hidden_layers}, {"hidden_width", p.hidden_width},
            {"epochs", p.epochs},               {"batch_size", p.batch_size},
            {"learning_rate", p.learning_rate}, {"seed", p.seed}};
}

struct LearnerConfig {
    LearnerKind kind = LearnerKind::random_forest;
    nlohmann::json params = nlohmann::json::object();

    nlohmann::json to_json() const { return {{"kind", to_string(kind)}, {"params", params}}; }

    static LearnerConfig from_json(const nlohmann::json& j) {
        LearnerConfig c;
        c.kind = learner_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("params")) c.params = j.at("params");
        return c;
    }
};

class Regressor {
public:
    LearnerKind kind = LearnerKind::random_forest;
    nlohmann::json hyperparameters;  // fully resolved
    MinMaxScaler scaler;             // identity when features are unscaled
    std::string trained_at_soh;      // SOH band label, e.g. "100"
    std::int64_t version = 0;
    std::uint64_t seed = 0;

    std::variant<RandomForestModel, GradientBoostedModel, MlpModel> model;

    double predict_row(const std::vector<double>& row) const {
        std::vector<double> scaled = scaler.transform(row);
        return std::visit([&](const auto& m) { return m.predict(scaled); }, model);
    }

    std::vector<double> predict(const Matrix& rows) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(predict_row(row));
        return out;
    }

    std::size_t n_features() const { return scaler.n_features(); }
};

inline Regressor train_random_forest(const Matrix& X, const std::vector<double>& y,
                                     const ForestParams& params) {
    Regressor r;
    r.kind = LearnerKind::random_forest;
    r.hyperparameters = to_json(params);
    r.seed = params.seed;
    r.scaler = MinMaxScaler::identity(X.empty() ? 0 : X[0].size());
    r.model = RandomForestModel::fit(X, y, params);
    return r;
}

inline Regressor train_gradient_boosted(const Matrix& X, const std::vector<double>& y,
                                        const BoostParams& params) {
    Regressor r;
    r.kind = LearnerKind::gradient_boosted;
    r.hyperparameters = to_json(params);
    r.seed = params.seed;
    r.scaler = MinMaxScaler::identity(X.empty() ? 0 : X[0].size());
    r.model = GradientBoostedModel::fit(X, y, params);
    return r;
}

inline Regressor train_mlp(const Matrix& X, const std::vector<double>& y, const MlpParams& params) {
    Regressor r;
    r.kind = LearnerKind::mlp;
    r.hyperparameters = to_json(params);
    r.seed = params.seed;
    r.scaler = MinMaxScaler::identity(X.empty() ? 0 : X[0].size());
    r.model = MlpModel::fit(X, y, params);
    return r;
}

// Fits the scaler (Min-Max when scale_features, identity otherwise),
// trains on the transformed matrix, and embeds the scaler in the model.
inline Regressor train_regressor(const LearnerConfig& cfg, const Matrix& X,
                                 const std::vector<double>& y, bool scale_features,
                                 std::uint64_t default_seed) {
    if (X.empty()) throw std::invalid_argument("empty training data");
    MinMaxScaler scaler =
        scale_features ? MinMaxScaler::fit(X) : MinMaxScaler::identity(X[0].size());
    Matrix Xs = scale_features ? scaler.transform(X) : X;
    Regressor r;
    switch (cfg.kind) {
        case LearnerKind::random_forest:
            r = train_random_forest(Xs, y, forest_params_from_json(cfg.params, default_seed));
            break;
        case LearnerKind::gradient_boosted:
            r = train_gradient_boosted(Xs, y, boost_params_from_json(cfg.params, default_seed));
            break;
        case LearnerKind::mlp:
            r = train_mlp(Xs, y, mlp_params_from_json(cfg.params, default_seed));
            break;
    }
    r.scaler = scaler;
    return r;
}

inline std::vector<double> predict(const Regressor& m, const Matrix& rows) { return m.predict(rows); }

inline EvalReport evaluate(const Regressor& m, const Matrix& X, const std::vector<double>& y_true) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> pred = m.predict(X);
    auto t1 = std::chrono::steady_clock::now();
    EvalReport r = compute_metrics(pred, y_true);
    r.infer_time_s = std::chrono::duration<double>(t1 - t0).count();
    return r;
}

inline nlohmann::json serialize_model(const Regressor& m) {
    nlohmann::json payload = std::visit([](const auto& mod) { return mod.payload_json(); }, m.model);
    return {{"schema_version", kModelSchemaVersion},
            {"kind", to_string(m.kind)},
            {"hyperparameters", m.hyperparameters},
            {"trained_at_soh", m.trained_at_soh},
            {"version", m.version},
            {"seed", m.seed},
            {"scaler", m.scaler.to_json()},
            {"payload", payload}};
}

inline Regressor deserialize_model(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::runtime_error("model artifact: expected a JSON object");
    for (const char* key : {"schema_version", "kind", "hyperparameters", "trained_at_soh",
                            "version", "seed", "scaler", "payload"})
        if (!doc.contains(key))
            throw std::runtime_error(std::string("model artifact: missing field '") + key + "'");
    const int schema = doc.at("schema_version").get<int>();
    if (schema != kModelSchemaVersion)
        throw std::runtime_error("model artifact: unsupported schema_version " +
                                 std::to_string(schema));
    Regressor r;
    r.kind = learner_kind_from_string(doc.at("kind").get<std::string>());
    r.hyperparameters = doc.at("hyperparameters");
    r.trained_at_soh = doc.at("trained_at_soh").get<std::string>();
    r.version = doc.at("version").get<std::int64_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.scaler = MinMaxScaler::from_json(doc.at("scaler"));
    const int d = static_cast<int>(r.scaler.n_features());
    const nlohmann::json& payload = doc.at("payload");
    switch (r.kind) {
        case LearnerKind::random_forest:
            r.model = RandomForestModel::payload_from_json(payload, d);
            break;
        case LearnerKind::gradient_boosted:
            r.model = GradientBoostedModel::payload_from_json(payload, d);
            break;
        case LearnerKind::mlp:
            r.model = MlpModel::payload_from_json(payload, d);
            break;
    }
    return r;
}

}  // namespace evtwin
