#pragma once

// Model inputs. Every sample contributes one feature row of
// (voltage, current, temperature, relative_time); targets are per-sample
// SOC or the per-cycle SOH. Min-Max scaling is fitted on training rows and
// travels inside the model artifact so the edge applies the exact same
// normalization as the cloud.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "evtwin/labeling.hpp"

namespace evtwin {

using Matrix = std::vector<std::vector<double>>;

struct FeatureRow {
    double voltage_v = 0.0;
    double current_a = 0.0;
    double temperature_c = 0.0;
    double relative_time_s = 0.0;

    static FeatureRow from_sample(const Sample& s) {
        return {s.voltage_v, s.current_a, s.temperature_c, s.relative_time_s};
    }

    std::vector<double> to_vector() const {
        return {voltage_v, current_a, temperature_c, relative_time_s};
    }
};

inline constexpr int kNumFeatures = 4;
inline constexpr int kRelativeTimeFeature = 3;
inline constexpr std::array<const char*, 4> kFeatureNames = {"voltage_v", "current_a",
                                                             "temperature_c", "relative_time_s"};

struct TrainingData {
    Matrix X;
    std::vector<double> y;
};

inline void check_finite(const Matrix& X) {
    for (const auto& row : X)
        for (double v : row)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
}

// Per-sample SOC targets over a set of cycles.
inline TrainingData soc_training_data(const std::vector<const LabeledCycle*>& cycles) {
    TrainingData td;
    for (const LabeledCycle* lc : cycles) {
        for (std::size_t k = 0; k < lc->cycle.samples.size(); ++k) {
            td.X.push_back(FeatureRow::from_sample(lc->cycle.samples[k]).to_vector());
            td.y.push_back(lc->soc_pct[k]);
        }
    }
    return td;
}

// Per-sample rows with the cycle's SOH as target, over the whole dataset.
inline TrainingData soh_training_data(const LabeledDataset& d) {
    TrainingData td;
    for (const auto& [battery, cycles] : d.batteries) {
        for (const auto& lc : cycles) {
            for (const Sample& s : lc.cycle.samples) {
                td.X.push_back(FeatureRow::from_sample(s).to_vector());
                td.y.push_back(lc.soh_pct);
            }
        }
    }
    return td;
}

inline Matrix drop_feature(const Matrix& X, int column) {
    Matrix out;
    out.reserve(X.size());
    for (const auto& row : X) {
        std::vector<double> r;
        r.reserve(row.size() - 1);
        for (std::size_t j = 0; j < row.size(); ++j)
            if (static_cast<int>(j) != column) r.push_back(row[j]);
        out.push_back(std::move(r));
    }
    return out;
}

class MinMaxScaler {
public:
    MinMaxScaler() = default;

    static MinMaxScaler fit(const Matrix& rows) {
        if (rows.empty()) throw std::invalid_argument("cannot fit scaler on empty input");
        MinMaxScaler s;
        const std::size_t d = rows[0].size();
        s.min_.assign(d, 0.0);
        s.max_.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            s.min_[j] = rows[0][j];
            s.max_[j] = rows[0][j];
        }
        for (const auto& row : rows) {
            if (row.size() != d) throw std::invalid_argument("ragged feature matrix");
            for (std::size_t j = 0; j < d; ++j) {
                if (!std::isfinite(row[j])) throw std::invalid_argument("non-finite feature value");
                s.min_[j] = std::min(s.min_[j], row[j]);
                s.max_[j] = std::max(s.max_[j], row[j]);
            }
        }
        s.fitted_ = true;
        return s;
    }

    // Pass-through scaler; SOH models train on unscaled features.
    static MinMaxScaler identity(std::size_t n_features) {
        MinMaxScaler s;
        s.min_.assign(n_features, 0.0);
        s.max_.assign(n_features, 1.0);
        s.fitted_ = true;
        return s;
    }

    bool fitted() const { return fitted_; }
    std::size_t n_features() const { return min_.size(); }
    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }

    // (x - min) / (max - min); constant features map to 0; inputs outside
    // the fit range are deliberately not clamped.
    std::vector<double> transform(const std::vector<double>& row) const {
        require_fitted();
        if (row.size() != min_.size())
            throw std::invalid_argument("feature dimension mismatch: got " +
                                        std::to_string(row.size()) + ", expected " +
                                        std::to_string(min_.size()));
        std::vector<double> out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            double range = max_[j] - min_[j];
            out[j] = range > 0.0 ? (row[j] - min_[j]) / range : 0.0;
        }
        return out;
    }

    Matrix transform(const Matrix& rows) const {
        Matrix out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(transform(row));
        return out;
    }

    nlohmann::json to_json() const {
        require_fitted();
        return {{"min", min_}, {"max", max_}};
    }

    static MinMaxScaler from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("min") || !j.contains("max"))
            throw std::runtime_error("scaler: expected object with min/max arrays");
        MinMaxScaler s;
        s.min_ = j.at("min").get<std::vector<double>>();
        s.max_ = j.at("max").get<std::vector<double>>();
        if (s.min_.size() != s.max_.size()) throw std::runtime_error("scaler: min/max size mismatch");
        for (std::size_t j2 = 0; j2 < s.min_.size(); ++j2)
            if (s.max_[j2] < s.min_[j2]) throw std::runtime_error("scaler: max < min");
        s.fitted_ = true;
        return s;
    }

private:
    void require_fitted() const {
        if (!fitted_) throw std::logic_error("scaler used before fit");
    }

    std::vector<double> min_;
    std::vector<double> max_;
    bool fitted_ = false;
};

}  // namespace evtwin
