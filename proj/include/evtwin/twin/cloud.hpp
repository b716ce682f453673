#pragma once

// Cloud actor: hosts the static SOH model (version 0, trained once at
// bootstrap and frozen), estimates SOH from every uploaded cycle, and
// retrains the SOC model from the most recent uploads when the trigger
// fires. Replies to each MeasurementBatch with a SohEstimate followed by
// either a ModelUpdate (trigger fired) or an Ack of the batch, so the edge
// always reads exactly two messages per turn.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "evtwin/labeling.hpp"
#include "evtwin/regressor.hpp"
#include "evtwin/twin/config.hpp"
#include "evtwin/twin/log.hpp"
#include "evtwin/twin/message.hpp"
#include "evtwin/twin/registry.hpp"

namespace evtwin::twin {

// SOH band label for artifacts, one decimal, trailing ".0" trimmed.
inline std::string format_band(double soh_pct) {
    double rounded = std::round(soh_pct * 10.0) / 10.0;
    std::string s = csv::format_double(rounded);
    return s;
}

class CloudActor {
public:
    CloudActor(TwinConfig cfg, TwinRunLog* log)
        : cfg_(std::move(cfg)), log_(log), trigger_(cfg_.soh_trigger_delta, cfg_.period_trigger) {
        cfg_.validate();
    }

    // Fig. 3 step (1): offline SOH model on the full historical aged span;
    // initial SOC model on nominal-condition cycles.
    void bootstrap(const LabeledDataset& historical, const std::vector<LabeledCycle>& nominal) {
        if (nominal.empty())
            throw std::invalid_argument("bootstrap: empty nominal cycle set for the SOC model");
        TrainingData soh_td = soh_training_data(historical);
        if (soh_td.X.empty()) throw std::invalid_argument("bootstrap: empty historical dataset");
        {
            double lo = soh_td.y[0], hi = soh_td.y[0];
            for (double v : soh_td.y) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (!(hi > lo))
                throw std::invalid_argument(
                    "bootstrap: historical data must span multiple SOH levels");
        }
        // SOH models train on unscaled features
        Regressor soh = train_regressor(cfg_.soh_learner, soh_td.X, soh_td.y, false,
                                        mix_seed(cfg_.seed, 1));
        soh.trained_at_soh = "historical";
        soh.version = 0;
        registry_.set_soh_model(serialize_model(soh));
        soh_model_ = std::move(soh);

        std::vector<const LabeledCycle*> nominal_ptrs;
        double nominal_soh = 0.0;
        for (const auto& lc : nominal) {
            nominal_ptrs.push_back(&lc);
            nominal_soh += lc.soh_pct;
        }
        nominal_soh /= static_cast<double>(nominal.size());
        TrainingData soc_td = soc_training_data(nominal_ptrs);
        // SOC models use Min-Max scaled features
        Regressor soc = train_regressor(cfg_.soc_learner, soc_td.X, soc_td.y, true,
                                        mix_seed(cfg_.seed, 2));
        soc.trained_at_soh = format_band(nominal_soh);
        soc.version = registry_.latest_soc_version() + 1;  // version 1
        nlohmann::json artifact = serialize_model(soc);
        registry_.add_soc_model(artifact);
        initial_soc_artifact_ = artifact;
        if (log_)
            log_->append("cloud", TwinEventKind::retrain_done, -1,
                         {{"version", soc.version},
                          {"band", soc.trained_at_soh},
                          {"n_rows", soc_td.X.size()},
                          {"reason", "bootstrap"}});
        // baseline: what the SOH model says about the nominal cycles
        double baseline = 0.0;
        for (const auto& lc : nominal) baseline += estimate_soh(lc.cycle);
        trigger_.arm(baseline / static_cast<double>(nominal.size()));
        bootstrapped_ = true;
    }

    const nlohmann::json& initial_soc_artifact() const {
        if (!bootstrapped_) throw std::logic_error("cloud not bootstrapped");
        return initial_soc_artifact_;
    }

    // Handles one inbound message; returns the ordered replies.
    std::vector<TwinMessage> handle(const TwinMessage& msg) {
        if (!bootstrapped_) throw std::logic_error("cloud not bootstrapped");
        if (msg.kind == MessageKind::ack) {
            // edge acknowledgement of a shipped model; nothing to send back
            last_ack_ = msg;
            return {};
        }
        if (msg.kind != MessageKind::measurement_batch)
            throw std::invalid_argument("cloud cannot handle message kind " +
                                        std::string(to_string(msg.kind)));
        const std::int64_t cycle_seq = uploads_handled_++;
        Cycle cycle = cycle_from_payload(msg.payload);

        recent_cycles_.push_back(cycle);
        while (recent_cycles_.size() > static_cast<std::size_t>(cfg_.retrain_window))
            recent_cycles_.pop_front();

        const double soh_now = estimate_soh(cycle);
        TwinMessage estimate;
        estimate.msg_id = next_msg_id_++;
        estimate.kind = MessageKind::soh_estimate;
        estimate.payload = {{"soh_pct", soh_now}, {"cycle_index", cycle.cycle_index}};
        if (log_)
            log_->append("cloud", TwinEventKind::soh_estimate, cycle_seq,
                         {{"cycle_index", cycle.cycle_index},
                          {"soh_pct", soh_now},
                          {"msg_id", estimate.msg_id}});

        std::vector<TwinMessage> replies;
        replies.push_back(std::move(estimate));

        std::optional<std::string> fired = trigger_.on_upload(soh_now);
        if (fired.has_value()) {
            if (log_)
                log_->append("cloud", TwinEventKind::trigger_fired, cycle_seq,
                             {{"cycle_index", cycle.cycle_index},
                              {"soh_pct", soh_now},
                              {"baseline_soh_pct", trigger_.baseline()},
                              {"reason", *fired}});
            nlohmann::json artifact = retrain_soc(soh_now, cycle_seq);
            trigger_.arm(soh_now);
            TwinMessage update;
            update.msg_id = next_msg_id_++;
            update.kind = MessageKind::model_update;
            update.payload = {{"artifact", artifact}};
            if (log_)
                log_->append("cloud", TwinEventKind::model_shipped, cycle_seq,
                             {{"version", artifact.at("version").get<std::int64_t>()},
                              {"msg_id", update.msg_id}});
            replies.push_back(std::move(update));
        } else {
            TwinMessage ack;
            ack.msg_id = next_msg_id_++;
            ack.kind = MessageKind::ack;
            ack.payload = {{"acked_msg_id", msg.msg_id}, {"accepted", true}, {"reason", ""}};
            replies.push_back(std::move(ack));
        }
        return replies;
    }

    // Per-cycle SOH: reduce the SOH model's per-sample outputs.
    double estimate_soh(const Cycle& cycle) const {
        std::vector<double> preds;
        preds.reserve(cycle.samples.size());
        for (const Sample& s : cycle.samples)
            preds.push_back(soh_model_.predict_row(FeatureRow::from_sample(s).to_vector()));
        if (cfg_.soh_reducer == "median") {
            std::sort(preds.begin(), preds.end());
            const std::size_t n = preds.size();
            return n % 2 == 1 ? preds[n / 2] : 0.5 * (preds[n / 2 - 1] + preds[n / 2]);
        }
        double sum = 0.0;
        for (double v : preds) sum += v;
        return sum / static_cast<double>(preds.size());
    }

    std::uint64_t soh_model_hash() const { return registry_.soh_model_hash(); }
    std::int64_t latest_soc_version() const { return registry_.latest_soc_version(); }
    int retrain_count() const { return retrain_count_; }
    const ModelRegistry& registry() const { return registry_; }

    nlohmann::json state_json() const {
        return {{"soh_model_hash", to_hex(soh_model_hash())},
                {"latest_soc_version", latest_soc_version()},
                {"retrain_count", retrain_count_}};
    }

private:
    // Fig. 3 steps (4)+(5): label the window by Coulomb counting against
    // each cycle's own measured capacity, retrain, register, ship.
    nlohmann::json retrain_soc(double soh_now, std::int64_t cycle_seq) {
        const std::int64_t version = registry_.latest_soc_version() + 1;
        if (log_)
            log_->append("cloud", TwinEventKind::retrain_started, cycle_seq,
                         {{"version", version}, {"n_window_cycles", recent_cycles_.size()}});
        TrainingData td;
        for (const Cycle& c : recent_cycles_) {
            LabeledCycle lc;
            lc.available_capacity_ah = cycle_capacity(c);
            lc.soc_pct = coulomb_count(c, lc.available_capacity_ah);
            for (std::size_t k = 0; k < c.samples.size(); ++k) {
                td.X.push_back(FeatureRow::from_sample(c.samples[k]).to_vector());
                td.y.push_back(lc.soc_pct[k]);
            }
        }
        Regressor soc = train_regressor(cfg_.soc_learner, td.X, td.y, true,
                                        mix_seed(cfg_.seed, 100 + static_cast<std::uint64_t>(version)));
        soc.trained_at_soh = format_band(soh_now);
        soc.version = version;
        nlohmann::json artifact = serialize_model(soc);
        registry_.add_soc_model(artifact);
        ++retrain_count_;
        if (log_)
            log_->append("cloud", TwinEventKind::retrain_done, cycle_seq,
                         {{"version", version},
                          {"band", soc.trained_at_soh},
                          {"n_rows", td.X.size()},
                          {"reason", "trigger"}});
        return artifact;
    }

    TwinConfig cfg_;
    TwinRunLog* log_;
    RetrainTrigger trigger_;
    Regressor soh_model_;
    ModelRegistry registry_;
    std::deque<Cycle> recent_cycles_;
    nlohmann::json initial_soc_artifact_;
    std::optional<TwinMessage> last_ack_;
    std::int64_t next_msg_id_ = 0;
    std::int64_t uploads_handled_ = 0;
    int retrain_count_ = 0;
    bool bootstrapped_ = false;
};

}  // namespace evtwin::twin
