#pragma once

// Whole-lifetime replay of the twin loop, and the model-staleness study.
//
// run_twin replays a labeled battery lifetime chronologically: the edge
// predicts SOC with its installed model and uploads the raw cycle; the
// cloud estimates SOH, retrains the SOC model when the trigger fires, and
// ships it back; the edge hot-swaps. The cloud can run in-process or in a
// forked child connected over the TCP line protocol; both produce the same
// merged event log.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evtwin/hashing.hpp"
#include "evtwin/labeling.hpp"
#include "evtwin/metrics.hpp"
#include "evtwin/twin/cloud.hpp"
#include "evtwin/twin/edge.hpp"
#include "evtwin/twin/transport.hpp"

namespace evtwin::twin {

enum class Transport { in_process, socket };

inline Transport transport_from_string(const std::string& s) {
    if (s == "inproc" || s == "in_process") return Transport::in_process;
    if (s == "socket") return Transport::socket;
    throw std::invalid_argument("unknown transport: " + s);
}

inline const std::vector<LabeledCycle>& select_battery(const LabeledDataset& ds,
                                                       const std::string& battery_id) {
    if (ds.batteries.empty()) throw std::invalid_argument("empty labeled dataset");
    if (battery_id.empty()) {
        if (ds.batteries.size() != 1)
            throw std::invalid_argument(
                "dataset has multiple batteries; a battery_id must be chosen");
        return ds.batteries.begin()->second;
    }
    auto it = ds.batteries.find(battery_id);
    if (it == ds.batteries.end()) throw std::invalid_argument("unknown battery: " + battery_id);
    return it->second;
}

struct TwinActors {
    TwinRunLog* cloud_log;
    TwinRunLog* edge_log;
    CloudActor cloud;
    EdgeActor edge;
};

// Fig. 3 step (1) as a free operation: offline SOH model on historical
// aged data, initial SOC model on nominal-condition cycles, installed on
// the edge.
inline TwinActors bootstrap(const LabeledDataset& historical,
                            const std::vector<LabeledCycle>& nominal, const TwinConfig& cfg,
                            TwinRunLog& cloud_log, TwinRunLog& edge_log) {
    TwinActors actors{&cloud_log, &edge_log, CloudActor(cfg, &cloud_log), EdgeActor(&edge_log)};
    actors.cloud.bootstrap(historical, nominal);
    actors.edge.install_initial(actors.cloud.initial_soc_artifact());
    return actors;
}

struct CycleReport {
    std::int64_t cycle_seq = 0;
    int cycle_index = 0;
    double soh_true_pct = 0.0;
    double soh_estimate_pct = 0.0;
    std::int64_t model_version = 0;
    EvalReport soc;

    nlohmann::json to_json() const {
        return {{"cycle_seq", cycle_seq},
                {"cycle_index", cycle_index},
                {"soh_true_pct", soh_true_pct},
                {"soh_estimate_pct", soh_estimate_pct},
                {"model_version", model_version},
                {"soc", soc.to_json()}};
    }
};

struct TwinRunResult {
    TwinRunLog log;  // merged edge + cloud, logical event_time
    std::vector<CycleReport> cycle_reports;
    int retrain_count = 0;
    std::int64_t final_soc_version = 0;
    std::uint64_t soh_hash_bootstrap = 0;
    std::uint64_t soh_hash_final = 0;
    double mean_soc_mae_pct = 0.0;

    nlohmann::json summary() const {
        return {{"cycles_replayed", cycle_reports.size()},
                {"retrain_count", retrain_count},
                {"final_soc_version", final_soc_version},
                {"soh_model_hash_bootstrap", to_hex(soh_hash_bootstrap)},
                {"soh_model_hash_final", to_hex(soh_hash_final)},
                {"mean_soc_mae_pct", mean_soc_mae_pct}};
    }
};

namespace detail {

// The per-turn protocol, shared by both transports: one batch out, a
// SohEstimate plus either a ModelUpdate or an Ack back, and an Ack from
// the edge when a model was shipped.
inline void drive_replay(EdgeActor& edge, CloudLink& link,
                         const std::vector<LabeledCycle>& cycles,
                         std::vector<CycleReport>& reports) {
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const LabeledCycle& lc = cycles[k];
        auto out = edge.process_cycle(lc.cycle, static_cast<std::int64_t>(k));
        link.send(out.batch);
        TwinMessage estimate = link.recv();
        if (estimate.kind != MessageKind::soh_estimate)
            throw std::runtime_error("protocol error: expected soh_estimate");
        TwinMessage second = link.recv();
        if (second.kind == MessageKind::model_update) {
            TwinMessage ack = edge.handle_model_update(second, static_cast<std::int64_t>(k));
            if (!ack.payload.at("accepted").get<bool>())
                throw std::runtime_error("edge rejected a cloud model update: " +
                                         ack.payload.at("reason").get<std::string>());
            link.send(ack);
        } else if (second.kind != MessageKind::ack) {
            throw std::runtime_error("protocol error: expected model_update or ack");
        }
        CycleReport report;
        report.cycle_seq = static_cast<std::int64_t>(k);
        report.cycle_index = lc.cycle.cycle_index;
        report.soh_true_pct = lc.soh_pct;
        report.soh_estimate_pct = estimate.payload.at("soh_pct").get<double>();
        report.model_version = out.model_version;
        report.soc = compute_metrics(out.soc_pred, lc.soc_pct);
        reports.push_back(std::move(report));
    }
}

inline std::string unique_temp_file(const char* tag) {
    static int counter = 0;
    auto path = std::filesystem::temp_directory_path() /
                ("evtwin_" + std::string(tag) + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++) + ".json");
    return path.string();
}

}  // namespace detail

inline TwinRunResult run_twin(const LabeledDataset& ds, const TwinConfig& cfg,
                              Transport transport = Transport::in_process) {
    cfg.validate();
    const std::vector<LabeledCycle>& cycles = select_battery(ds, cfg.battery_id);
    if (cycles.empty()) throw std::invalid_argument("selected battery has no cycles");
    std::vector<LabeledCycle> nominal = {cycles.front()};

    TwinRunLog cloud_log, edge_log;
    TwinActors actors = bootstrap(ds, nominal, cfg, cloud_log, edge_log);

    TwinRunResult result;
    result.soh_hash_bootstrap = actors.cloud.soh_model_hash();

    if (transport == Transport::in_process) {
        InProcessLink link(actors.cloud);
        detail::drive_replay(actors.edge, link, cycles, result.cycle_reports);
        result.retrain_count = actors.cloud.retrain_count();
        result.final_soc_version = actors.cloud.latest_soc_version();
        result.soh_hash_final = actors.cloud.soh_model_hash();
        result.log = merge_logs(edge_log, cloud_log);
    } else {
        const std::string result_path = detail::unique_temp_file("cloud");
        auto [listen_fd, port] = listen_loopback();
        pid_t pid = ::fork();
        if (pid < 0) {
            ::close(listen_fd);
            throw std::runtime_error("fork failed");
        }
        if (pid == 0) {
            // child: the cloud process
            int exit_code = 0;
            try {
                LineSocket conn = accept_one(listen_fd);
                ::close(listen_fd);
                serve_cloud(conn, actors.cloud);
                nlohmann::json out = {{"state", actors.cloud.state_json()},
                                      {"log_jsonl", cloud_log.to_jsonl()}};
                csv::write_file(result_path, out.dump());
            } catch (const std::exception& e) {
                try {
                    csv::write_file(result_path, nlohmann::json{{"error", e.what()}}.dump());
                } catch (...) {
                }
                exit_code = 1;
            }
            ::_exit(exit_code);
        }
        ::close(listen_fd);
        SocketLink link(connect_loopback(port));
        detail::drive_replay(actors.edge, link, cycles, result.cycle_reports);
        link.socket().shutdown_write();
        int status = 0;
        ::waitpid(pid, &status, 0);
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
            throw std::runtime_error("cloud process failed");
        nlohmann::json out = nlohmann::json::parse(csv::read_file(result_path));
        std::filesystem::remove(result_path);
        if (out.contains("error"))
            throw std::runtime_error("cloud process error: " + out.at("error").get<std::string>());
        TwinRunLog remote_cloud_log = TwinRunLog::from_jsonl(out.at("log_jsonl").get<std::string>());
        result.retrain_count = out.at("state").at("retrain_count").get<int>();
        result.final_soc_version = out.at("state").at("latest_soc_version").get<std::int64_t>();
        std::string hash_hex = out.at("state").at("soh_model_hash").get<std::string>();
        result.soh_hash_final = std::stoull(hash_hex, nullptr, 16);
        result.log = merge_logs(edge_log, remote_cloud_log);
    }

    double mae_sum = 0.0;
    for (const auto& r : result.cycle_reports) mae_sum += r.soc.mae_pct;
    result.mean_soc_mae_pct =
        result.cycle_reports.empty() ? 0.0 : mae_sum / static_cast<double>(result.cycle_reports.size());
    return result;
}

// ---------------------------------------------------------------------------
// Staleness study: train one SOC model per requested SOH band, evaluate all
// of them on the cycle nearest the eval band.

struct StalenessRow {
    double band = 0.0;
    int train_cycle_index = 0;
    double train_cycle_soh = 0.0;
    EvalReport report;
};

struct StalenessResult {
    std::vector<StalenessRow> rows;  // ordered as the requested bands
    int eval_cycle_index = 0;
    double eval_cycle_soh = 0.0;
    std::vector<double> curve_time_s;
    std::vector<double> curve_true_soc;
    std::vector<std::vector<double>> curve_pred;  // one per band, aligned with rows

    nlohmann::json table_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json j = r.report.to_json();
            j["band"] = r.band;
            j["train_cycle_index"] = r.train_cycle_index;
            j["train_cycle_soh_pct"] = r.train_cycle_soh;
            arr.push_back(j);
        }
        return {{"eval_cycle_index", eval_cycle_index},
                {"eval_cycle_soh_pct", eval_cycle_soh},
                {"rows", arr}};
    }

    // one column per band plus the ground truth
    std::string curves_csv() const {
        std::string out = "relative_time_s,soc_true_pct";
        for (const auto& r : rows) out += ",band_" + format_band(r.band);
        out += '\n';
        for (std::size_t i = 0; i < curve_time_s.size(); ++i) {
            out += csv::format_double(curve_time_s[i]);
            out += ',';
            out += csv::format_double(curve_true_soc[i]);
            for (const auto& pred : curve_pred) {
                out += ',';
                out += csv::format_double(pred[i]);
            }
            out += '\n';
        }
        return out;
    }
};

inline std::size_t nearest_cycle_to_band(const std::vector<LabeledCycle>& cycles, double band,
                                         double tolerance_pct) {
    std::size_t best = cycles.size();
    double best_dist = 0.0;
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        double dist = std::abs(cycles[k].soh_pct - band);
        if (best == cycles.size() || dist < best_dist) {
            best = k;
            best_dist = dist;
        }
    }
    if (best == cycles.size() || best_dist > tolerance_pct)
        throw std::invalid_argument("no cycle within " + csv::format_double(tolerance_pct) +
                                    "% of SOH band " + csv::format_double(band));
    return best;
}

inline StalenessResult evaluate_staleness(const LabeledDataset& ds,
                                          const std::vector<double>& train_bands, double eval_band,
                                          const LearnerConfig& learner, std::uint64_t seed,
                                          double band_tolerance_pct = 2.5,
                                          const std::string& battery_id = "") {
    if (train_bands.empty()) throw std::invalid_argument("no train bands given");
    const std::vector<LabeledCycle>& cycles = select_battery(ds, battery_id);
    const LabeledCycle& eval_cycle =
        cycles[nearest_cycle_to_band(cycles, eval_band, band_tolerance_pct)];

    StalenessResult result;
    result.eval_cycle_index = eval_cycle.cycle.cycle_index;
    result.eval_cycle_soh = eval_cycle.soh_pct;
    for (const Sample& s : eval_cycle.cycle.samples)
        result.curve_time_s.push_back(s.relative_time_s);
    result.curve_true_soc = eval_cycle.soc_pct;

    Matrix eval_X;
    for (const Sample& s : eval_cycle.cycle.samples)
        eval_X.push_back(FeatureRow::from_sample(s).to_vector());

    for (std::size_t b = 0; b < train_bands.size(); ++b) {
        const LabeledCycle& train_cycle =
            cycles[nearest_cycle_to_band(cycles, train_bands[b], band_tolerance_pct)];
        TrainingData td = soc_training_data({&train_cycle});
        auto t0 = std::chrono::steady_clock::now();
        Regressor m = train_regressor(learner, td.X, td.y, true, mix_seed(seed, b));
        auto t1 = std::chrono::steady_clock::now();
        m.trained_at_soh = format_band(train_bands[b]);

        std::vector<double> pred = m.predict(eval_X);
        auto t2 = std::chrono::steady_clock::now();
        StalenessRow row;
        row.band = train_bands[b];
        row.train_cycle_index = train_cycle.cycle.cycle_index;
        row.train_cycle_soh = train_cycle.soh_pct;
        row.report = compute_metrics(pred, eval_cycle.soc_pct);
        row.report.train_time_s = std::chrono::duration<double>(t1 - t0).count();
        row.report.infer_time_s = std::chrono::duration<double>(t2 - t1).count();
        result.rows.push_back(std::move(row));
        result.curve_pred.push_back(std::move(pred));
    }
    return result;
}

}  // namespace evtwin::twin
