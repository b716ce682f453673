#pragma once

// Edge actor: runs SOC inference with the installed model, forwards every
// raw cycle to the cloud as a MeasurementBatch, and applies ModelUpdates
// with an atomic hot-swap. Inference and swap may run on different
// threads; a prediction pass pins one model via shared_ptr so it never
// mixes parameters from two versions.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "evtwin/labeling.hpp"
#include "evtwin/regressor.hpp"
#include "evtwin/twin/log.hpp"
#include "evtwin/twin/message.hpp"

namespace evtwin::twin {

class EdgeActor {
public:
    explicit EdgeActor(TwinRunLog* log) : log_(log), swap_mutex_(std::make_unique<std::mutex>()) {}

    // Bootstrap install of the initial SOC model (no Ack, nothing on the wire).
    void install_initial(const nlohmann::json& artifact) {
        auto model = std::make_shared<const Regressor>(deserialize_model(artifact));
        {
            std::lock_guard<std::mutex> lock(*swap_mutex_);
            model_ = std::move(model);
        }
        if (log_)
            log_->append("edge", TwinEventKind::model_swapped, -1,
                         {{"version", current()->version}});
    }

    struct StepOutput {
        std::vector<double> soc_pred;
        std::int64_t model_version = 0;
        TwinMessage batch;
    };

    // Fig. 3 steps (2)+(3): predict SOC for the incoming cycle with the
    // currently installed model, then emit the full raw cycle for upload.
    StepOutput process_cycle(const Cycle& cycle, std::int64_t cycle_seq) {
        if (cycle.samples.empty()) throw std::invalid_argument("edge_step: empty cycle");
        std::shared_ptr<const Regressor> model = current();
        StepOutput out;
        out.model_version = model->version;
        out.soc_pred.reserve(cycle.samples.size());
        for (const Sample& s : cycle.samples)
            out.soc_pred.push_back(model->predict_row(FeatureRow::from_sample(s).to_vector()));
        if (log_)
            log_->append("edge", TwinEventKind::soc_inference, cycle_seq,
                         {{"cycle_index", cycle.cycle_index},
                          {"model_version", out.model_version},
                          {"n_samples", cycle.samples.size()}});
        out.batch.msg_id = next_msg_id_++;
        out.batch.kind = MessageKind::measurement_batch;
        out.batch.payload = cycle_to_payload(cycle);
        if (log_)
            log_->append("edge", TwinEventKind::upload, cycle_seq,
                         {{"cycle_index", cycle.cycle_index},
                          {"msg_id", out.batch.msg_id},
                          {"n_samples", cycle.samples.size()}});
        return out;
    }

    // Per-sample inference against the pinned model; used by the
    // concurrency tests and by callers outside the replay loop.
    std::pair<double, std::int64_t> predict_one(const Sample& s) const {
        std::shared_ptr<const Regressor> model = current();
        return {model->predict_row(FeatureRow::from_sample(s).to_vector()), model->version};
    }

    // Fig. 3 step (6). Stale or corrupt updates are rejected and the old
    // model keeps serving; the Ack carries the reason.
    TwinMessage handle_model_update(const TwinMessage& update, std::int64_t cycle_seq) {
        if (update.kind != MessageKind::model_update)
            throw std::invalid_argument("expected a model_update message");
        TwinMessage ack;
        ack.msg_id = next_msg_id_++;
        ack.kind = MessageKind::ack;

        std::shared_ptr<const Regressor> incoming;
        std::string reason;
        try {
            incoming = std::make_shared<const Regressor>(
                deserialize_model(update.payload.at("artifact")));
        } catch (const std::exception& e) {
            reason = std::string("corrupt artifact: ") + e.what();
        }
        if (incoming) {
            const std::int64_t installed = current()->version;
            if (incoming->version <= installed)
                reason = "stale version " + std::to_string(incoming->version) +
                         " (installed " + std::to_string(installed) + ")";
        }
        if (!reason.empty()) {
            ack.payload = {{"acked_msg_id", update.msg_id}, {"accepted", false}, {"reason", reason}};
            return ack;
        }
        {
            std::lock_guard<std::mutex> lock(*swap_mutex_);
            model_ = incoming;
        }
        if (log_)
            log_->append("edge", TwinEventKind::model_swapped, cycle_seq,
                         {{"version", incoming->version}});
        ack.payload = {{"acked_msg_id", update.msg_id}, {"accepted", true}, {"reason", ""}};
        return ack;
    }

    std::int64_t installed_version() const { return current()->version; }
    bool has_model() const {
        std::lock_guard<std::mutex> lock(*swap_mutex_);
        return model_ != nullptr;
    }

private:
    std::shared_ptr<const Regressor> current() const {
        std::lock_guard<std::mutex> lock(*swap_mutex_);
        if (!model_) throw std::logic_error("edge has no installed SOC model (not bootstrapped)");
        return model_;
    }

    TwinRunLog* log_;
    std::unique_ptr<std::mutex> swap_mutex_;
    std::shared_ptr<const Regressor> model_;
    std::int64_t next_msg_id_ = 0;
};

}  // namespace evtwin::twin
