#pragma once

// Cloud-side model store and the retrain trigger bookkeeping.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>

#include "json.hpp"

#include "evtwin/hashing.hpp"

namespace evtwin::twin {

// Versions are dense and increasing: 0 is the SOH model, frozen at
// bootstrap; 1.. are SOC models.
class ModelRegistry {
public:
    void set_soh_model(nlohmann::json artifact) {
        if (soh_set_) throw std::logic_error("SOH model is immutable once bootstrapped");
        soh_model_ = std::move(artifact);
        soh_set_ = true;
    }

    const nlohmann::json& soh_model() const {
        if (!soh_set_) throw std::logic_error("registry not bootstrapped");
        return soh_model_;
    }

    std::uint64_t soh_model_hash() const { return fnv1a64(soh_model().dump()); }

    std::int64_t add_soc_model(nlohmann::json artifact) {
        const std::int64_t version = latest_soc_version_ + 1;
        soc_models_[version] = std::move(artifact);
        latest_soc_version_ = version;
        return version;
    }

    const nlohmann::json& soc_model(std::int64_t version) const {
        auto it = soc_models_.find(version);
        if (it == soc_models_.end())
            throw std::invalid_argument("no SOC model with version " + std::to_string(version));
        return it->second;
    }

    std::int64_t latest_soc_version() const { return latest_soc_version_; }
    std::size_t soc_model_count() const { return soc_models_.size(); }

private:
    nlohmann::json soh_model_;
    bool soh_set_ = false;
    std::map<std::int64_t, nlohmann::json> soc_models_;
    std::int64_t latest_soc_version_ = 0;
};

// Fires when SOH has dropped `delta` below the SOH at the last retrain, or
// after `period` uploads. The baseline is the SOH at the last retrain, not
// the previous cycle, so small per-cycle drops accumulate.
class RetrainTrigger {
public:
    RetrainTrigger(std::optional<double> delta, std::optional<int> period)
        : delta_(delta), period_(period) {}

    void arm(double soh_baseline) {
        baseline_ = soh_baseline;
        uploads_since_ = 0;
    }

    // Counts this upload, then evaluates. Returns the reason when firing.
    std::optional<std::string> on_upload(double soh_now) {
        ++uploads_since_;
        if (delta_.has_value() && baseline_ - soh_now >= *delta_) return "soh_delta";
        if (period_.has_value() && uploads_since_ >= *period_) return "period";
        return std::nullopt;
    }

    double baseline() const { return baseline_; }

private:
    std::optional<double> delta_;
    std::optional<int> period_;
    double baseline_ = 100.0;
    int uploads_since_ = 0;
};

}  // namespace evtwin::twin
