#pragma once

// Observability of the twin loop. Each actor records its own events with a
// (cycle_seq, rank) pair; merging sorts on that pair and assigns the final
// logical event_time, so in-process and two-process runs of the same
// configuration produce byte-identical logs.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace evtwin::twin {

enum class TwinEventKind {
    soc_inference,    // edge, uses the model installed when the cycle arrived
    upload,           // edge -> cloud measurement batch
    soh_estimate,     // cloud
    trigger_fired,    // cloud
    retrain_started,  // cloud
    retrain_done,     // cloud
    model_shipped,    // cloud -> edge
    model_swapped,    // edge
};

inline const char* to_string(TwinEventKind k) {
    switch (k) {
        case TwinEventKind::soc_inference: return "soc_inference";
        case TwinEventKind::upload: return "upload";
        case TwinEventKind::soh_estimate: return "soh_estimate";
        case TwinEventKind::trigger_fired: return "trigger_fired";
        case TwinEventKind::retrain_started: return "retrain_started";
        case TwinEventKind::retrain_done: return "retrain_done";
        case TwinEventKind::model_shipped: return "model_shipped";
        case TwinEventKind::model_swapped: return "model_swapped";
    }
    throw std::logic_error("unknown event kind");
}

inline TwinEventKind event_kind_from_string(const std::string& s) {
    for (int k = 0; k <= static_cast<int>(TwinEventKind::model_swapped); ++k)
        if (s == to_string(static_cast<TwinEventKind>(k))) return static_cast<TwinEventKind>(k);
    throw std::runtime_error("unknown event kind: " + s);
}

// fixed order of events within one replay step
inline int event_rank(TwinEventKind k) { return static_cast<int>(k); }

struct TwinEvent {
    std::int64_t event_time = 0;  // logical, assigned on merge
    std::string actor;            // "edge" or "cloud"
    TwinEventKind kind = TwinEventKind::soc_inference;
    std::int64_t cycle_seq = 0;  // replay step; -1 for bootstrap
    nlohmann::json details;

    nlohmann::json to_json() const {
        return {{"event_time", event_time},
                {"actor", actor},
                {"kind", to_string(kind)},
                {"cycle_seq", cycle_seq},
                {"details", details}};
    }

    static TwinEvent from_json(const nlohmann::json& j) {
        TwinEvent e;
        e.event_time = j.at("event_time").get<std::int64_t>();
        e.actor = j.at("actor").get<std::string>();
        e.kind = event_kind_from_string(j.at("kind").get<std::string>());
        e.cycle_seq = j.at("cycle_seq").get<std::int64_t>();
        e.details = j.at("details");
        return e;
    }
};

struct TwinRunLog {
    std::vector<TwinEvent> events;

    void append(const std::string& actor, TwinEventKind kind, std::int64_t cycle_seq,
                nlohmann::json details) {
        TwinEvent e;
        e.event_time = static_cast<std::int64_t>(events.size());
        e.actor = actor;
        e.kind = kind;
        e.cycle_seq = cycle_seq;
        e.details = std::move(details);
        events.push_back(std::move(e));
    }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& e : events) {
            out += e.to_json().dump();
            out += '\n';
        }
        return out;
    }

    static TwinRunLog from_jsonl(const std::string& text) {
        TwinRunLog log;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            log.events.push_back(TwinEvent::from_json(nlohmann::json::parse(line)));
        }
        return log;
    }

    // Violations of the loop contract; empty means the log is well-formed.
    std::vector<std::string> invariant_violations() const {
        std::vector<std::string> out;
        bool trigger_open = false;
        std::int64_t trigger_seq = 0;
        int retrains_since = 0, swaps_since = 0;
        std::int64_t last_swapped_version = -1;
        std::int64_t current_version = -1;
        for (const auto& e : events) {
            switch (e.kind) {
                case TwinEventKind::trigger_fired:
                    if (trigger_open && (retrains_since != 1 || swaps_since != 1))
                        out.push_back("trigger at cycle_seq " + std::to_string(trigger_seq) +
                                      " saw " + std::to_string(retrains_since) + " retrain_done and " +
                                      std::to_string(swaps_since) +
                                      " model_swapped before the next trigger");
                    trigger_open = true;
                    trigger_seq = e.cycle_seq;
                    retrains_since = 0;
                    swaps_since = 0;
                    break;
                case TwinEventKind::retrain_done:
                    if (trigger_open) ++retrains_since;
                    break;
                case TwinEventKind::model_swapped: {
                    std::int64_t v = e.details.at("version").get<std::int64_t>();
                    if (v <= last_swapped_version)
                        out.push_back("model_swapped version " + std::to_string(v) +
                                      " not above previous " + std::to_string(last_swapped_version));
                    last_swapped_version = v;
                    current_version = v;
                    if (trigger_open) ++swaps_since;
                    break;
                }
                case TwinEventKind::soc_inference: {
                    std::int64_t v = e.details.at("model_version").get<std::int64_t>();
                    if (v != current_version)
                        out.push_back("soc_inference at cycle_seq " + std::to_string(e.cycle_seq) +
                                      " used version " + std::to_string(v) + ", installed is " +
                                      std::to_string(current_version));
                    break;
                }
                default:
                    break;
            }
        }
        if (trigger_open && (retrains_since != 1 || swaps_since != 1))
            out.push_back("trigger at cycle_seq " + std::to_string(trigger_seq) + " saw " +
                          std::to_string(retrains_since) + " retrain_done and " +
                          std::to_string(swaps_since) + " model_swapped before the log ended");
        return out;
    }
};

// Stable order: (cycle_seq, in-step rank); `first` wins ties so the edge
// log should be passed first.
inline TwinRunLog merge_logs(const TwinRunLog& first, const TwinRunLog& second) {
    struct Tagged {
        const TwinEvent* e;
        int source;
        std::int64_t source_pos;
    };
    std::vector<Tagged> all;
    for (std::size_t i = 0; i < first.events.size(); ++i)
        all.push_back({&first.events[i], 0, static_cast<std::int64_t>(i)});
    for (std::size_t i = 0; i < second.events.size(); ++i)
        all.push_back({&second.events[i], 1, static_cast<std::int64_t>(i)});
    std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
        if (a.e->cycle_seq != b.e->cycle_seq) return a.e->cycle_seq < b.e->cycle_seq;
        if (event_rank(a.e->kind) != event_rank(b.e->kind))
            return event_rank(a.e->kind) < event_rank(b.e->kind);
        if (a.source != b.source) return a.source < b.source;
        return a.source_pos < b.source_pos;
    });
    TwinRunLog merged;
    for (const Tagged& t : all) {
        TwinEvent e = *t.e;
        e.event_time = static_cast<std::int64_t>(merged.events.size());
        merged.events.push_back(std::move(e));
    }
    return merged;
}

}  // namespace evtwin::twin
