#pragma once

// Wire envelope exchanged between the edge and the cloud. One JSON object
// per line on the stream transport:
//   {"msg_id": n, "kind": "...", "payload": {...}}
// msg_id is strictly increasing per sender. A ModelUpdate embeds the model
// artifact document verbatim.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "evtwin/dataset.hpp"

namespace evtwin::twin {

enum class MessageKind { measurement_batch, soh_estimate, model_update, ack };

inline const char* to_string(MessageKind k) {
    switch (k) {
        case MessageKind::measurement_batch: return "measurement_batch";
        case MessageKind::soh_estimate: return "soh_estimate";
        case MessageKind::model_update: return "model_update";
        case MessageKind::ack: return "ack";
    }
    throw std::logic_error("unknown message kind");
}

inline MessageKind message_kind_from_string(const std::string& s) {
    if (s == "measurement_batch") return MessageKind::measurement_batch;
    if (s == "soh_estimate") return MessageKind::soh_estimate;
    if (s == "model_update") return MessageKind::model_update;
    if (s == "ack") return MessageKind::ack;
    throw std::runtime_error("unknown message kind: " + s);
}

struct TwinMessage {
    std::int64_t msg_id = 0;
    MessageKind kind = MessageKind::ack;
    nlohmann::json payload;

    nlohmann::json to_json() const {
        return {{"msg_id", msg_id}, {"kind", to_string(kind)}, {"payload", payload}};
    }

    static TwinMessage from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("msg_id") || !j.contains("kind") || !j.contains("payload"))
            throw std::runtime_error("twin message: expected msg_id/kind/payload");
        TwinMessage m;
        m.msg_id = j.at("msg_id").get<std::int64_t>();
        m.kind = message_kind_from_string(j.at("kind").get<std::string>());
        m.payload = j.at("payload");
        return m;
    }
};

inline std::string encode_line(const TwinMessage& m) { return m.to_json().dump(); }

inline TwinMessage decode_line(const std::string& line) {
    return TwinMessage::from_json(nlohmann::json::parse(line));
}

// measurement batch payload <-> cycle
inline nlohmann::json cycle_to_payload(const Cycle& c) {
    nlohmann::json samples = nlohmann::json::array();
    for (const Sample& s : c.samples)
        samples.push_back({s.relative_time_s, s.voltage_v, s.current_a, s.temperature_c});
    return {{"battery_id", c.battery_id}, {"cycle_index", c.cycle_index}, {"samples", samples}};
}

inline Cycle cycle_from_payload(const nlohmann::json& j) {
    Cycle c;
    c.battery_id = j.at("battery_id").get<std::string>();
    c.cycle_index = j.at("cycle_index").get<int>();
    for (const auto& row : j.at("samples")) {
        if (!row.is_array() || row.size() != 4)
            throw std::runtime_error("measurement batch: expected [t, v, i, temp] rows");
        Sample s;
        s.relative_time_s = row[0].get<double>();
        s.voltage_v = row[1].get<double>();
        s.current_a = row[2].get<double>();
        s.temperature_c = row[3].get<double>();
        c.samples.push_back(s);
    }
    if (c.samples.empty()) throw std::runtime_error("measurement batch: no samples");
    return c;
}

}  // namespace evtwin::twin
