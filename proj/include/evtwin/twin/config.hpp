#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "evtwin/regressor.hpp"

namespace evtwin::twin {

// Twin loop configuration. Retraining fires when the estimated SOH has
// dropped soh_trigger_delta below the SOH at the last retrain, or after
// period_trigger uploads, whichever is enabled (at least one must be).
struct TwinConfig {
    std::optional<double> soh_trigger_delta = 1.0;  // percent
    std::optional<int> period_trigger;              // uploads between retrains
    LearnerConfig soc_learner{};
    LearnerConfig soh_learner{};
    int retrain_window = 3;  // most recent uploaded cycles used to retrain
    std::string soh_reducer = "mean";  // per-cycle reduction: "mean" | "median"
    std::string battery_id;  // which battery a run replays; may stay empty
                             // when the dataset has exactly one
    std::uint64_t seed = 0;

    void validate() const {
        if (!soh_trigger_delta.has_value() && !period_trigger.has_value())
            throw std::invalid_argument("twin config: no retrain trigger enabled");
        if (soh_trigger_delta.has_value() && !(*soh_trigger_delta > 0.0))
            throw std::invalid_argument("twin config: soh_trigger_delta must be > 0");
        if (period_trigger.has_value() && *period_trigger < 1)
            throw std::invalid_argument("twin config: period_trigger must be >= 1");
        if (retrain_window < 1)
            throw std::invalid_argument("twin config: retrain_window must be >= 1");
        if (soh_reducer != "mean" && soh_reducer != "median")
            throw std::invalid_argument("twin config: soh_reducer must be mean or median");
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"retrain_window", retrain_window},
                            {"soh_reducer", soh_reducer},
                            {"battery_id", battery_id},
                            {"seed", seed},
                            {"soc_learner", soc_learner.to_json()},
                            {"soh_learner", soh_learner.to_json()}};
        j["soh_trigger_delta"] =
            soh_trigger_delta.has_value() ? nlohmann::json(*soh_trigger_delta) : nlohmann::json();
        j["period_trigger"] =
            period_trigger.has_value() ? nlohmann::json(*period_trigger) : nlohmann::json();
        return j;
    }

    static TwinConfig from_json(const nlohmann::json& j) {
        TwinConfig c;
        if (j.contains("soh_trigger_delta")) {
            if (j.at("soh_trigger_delta").is_null())
                c.soh_trigger_delta.reset();
            else
                c.soh_trigger_delta = j.at("soh_trigger_delta").get<double>();
        }
        if (j.contains("period_trigger") && !j.at("period_trigger").is_null())
            c.period_trigger = j.at("period_trigger").get<int>();
        if (j.contains("soc_learner")) c.soc_learner = LearnerConfig::from_json(j.at("soc_learner"));
        if (j.contains("soh_learner")) c.soh_learner = LearnerConfig::from_json(j.at("soh_learner"));
        if (j.contains("retrain_window")) c.retrain_window = j.at("retrain_window").get<int>();
        if (j.contains("soh_reducer")) c.soh_reducer = j.at("soh_reducer").get<std::string>();
        if (j.contains("battery_id")) c.battery_id = j.at("battery_id").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        c.validate();
        return c;
    }
};

}  // namespace evtwin::twin
