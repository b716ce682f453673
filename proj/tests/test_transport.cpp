#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "evtwin/synth.hpp"
#include "evtwin/twin/runtime.hpp"

using namespace evtwin;
using namespace evtwin::twin;

TEST_CASE("twin message json codec round-trips every kind") {
    std::vector<TwinMessage> messages;
    TwinMessage batch;
    batch.msg_id = 0;
    batch.kind = MessageKind::measurement_batch;
    Cycle c;
    c.battery_id = "B1";
    c.cycle_index = 4;
    c.samples = {{0.0, 4.2, 1.05, 25.0}, {10.0, 4.19, 1.05, 25.1}};
    batch.payload = cycle_to_payload(c);
    messages.push_back(batch);

    TwinMessage est;
    est.msg_id = 1;
    est.kind = MessageKind::soh_estimate;
    est.payload = {{"soh_pct", 93.25}, {"cycle_index", 4}};
    messages.push_back(est);

    TwinMessage update;
    update.msg_id = 2;
    update.kind = MessageKind::model_update;
    update.payload = {{"artifact", {{"schema_version", 1}, {"version", 2}}}};
    messages.push_back(update);

    TwinMessage ack;
    ack.msg_id = 3;
    ack.kind = MessageKind::ack;
    ack.payload = {{"acked_msg_id", 2}, {"accepted", true}, {"reason", ""}};
    messages.push_back(ack);

    for (const auto& m : messages) {
        TwinMessage back = decode_line(encode_line(m));
        CHECK(back.msg_id == m.msg_id);
        CHECK(back.kind == m.kind);
        CHECK(back.payload == m.payload);
    }

    Cycle round = cycle_from_payload(batch.payload);
    CHECK(round == c);

    CHECK_THROWS(decode_line("{\"msg_id\": 1}"));
    CHECK_THROWS(decode_line("not json"));
}

TEST_CASE("line socket frames messages over a loopback stream") {
    auto [listen_fd, port] = listen_loopback();
    LineSocket client = connect_loopback(port);
    LineSocket server = accept_one(listen_fd);
    ::close(listen_fd);

    client.send_line(R"({"msg_id":0,"kind":"ack","payload":{}})");
    client.send_line(R"({"msg_id":1,"kind":"ack","payload":{}})");
    auto first = server.recv_line();
    auto second = server.recv_line();
    REQUIRE(first.has_value());
    REQUIRE(second.has_value());
    CHECK(decode_line(*first).msg_id == 0);
    CHECK(decode_line(*second).msg_id == 1);

    server.send_line("pong");
    CHECK(client.recv_line().value() == "pong");

    client.shutdown_write();
    CHECK(!server.recv_line().has_value());  // clean EOF
}

TEST_CASE("socket and in-process transports produce identical run logs") {
    SynthParams p;
    p.soh_schedule_pct = linear_soh_schedule(100.0, 88.0, 13);
    p.sample_period_s = 40.0;
    LabeledDataset ds = build_labeled_dataset(generate_lifetime(p), 0.0);

    TwinConfig cfg;
    cfg.soh_trigger_delta = 2.0;
    cfg.soc_learner.kind = LearnerKind::random_forest;
    cfg.soc_learner.params = {{"n_trees", 10}, {"max_depth", 10}};
    cfg.soh_learner = cfg.soc_learner;
    cfg.seed = 5;

    TwinRunResult inproc = run_twin(ds, cfg, Transport::in_process);
    TwinRunResult socket = run_twin(ds, cfg, Transport::socket);

    CHECK(inproc.log.to_jsonl() == socket.log.to_jsonl());
    CHECK(inproc.summary() == socket.summary());
    REQUIRE(inproc.cycle_reports.size() == socket.cycle_reports.size());
    for (std::size_t k = 0; k < inproc.cycle_reports.size(); ++k) {
        CHECK(inproc.cycle_reports[k].soh_estimate_pct == socket.cycle_reports[k].soh_estimate_pct);
        CHECK(inproc.cycle_reports[k].soc.mae_pct == socket.cycle_reports[k].soc.mae_pct);
        CHECK(inproc.cycle_reports[k].model_version == socket.cycle_reports[k].model_version);
    }
    CHECK(inproc.retrain_count == socket.retrain_count);
    CHECK(socket.soh_hash_final == inproc.soh_hash_final);
}

TEST_CASE("merged logs order events by cycle and in-step rank") {
    TwinRunLog edge, cloud;
    edge.append("edge", TwinEventKind::soc_inference, 0, {{"model_version", 1}, {"cycle_index", 0}});
    edge.append("edge", TwinEventKind::upload, 0, {{"cycle_index", 0}});
    edge.append("edge", TwinEventKind::model_swapped, 0, {{"version", 2}});
    cloud.append("cloud", TwinEventKind::soh_estimate, 0, {{"soh_pct", 99.0}});
    cloud.append("cloud", TwinEventKind::trigger_fired, 0, {{"soh_pct", 99.0}});
    cloud.append("cloud", TwinEventKind::retrain_started, 0, {{"version", 2}});
    cloud.append("cloud", TwinEventKind::retrain_done, 0, {{"version", 2}});
    cloud.append("cloud", TwinEventKind::model_shipped, 0, {{"version", 2}});

    TwinRunLog merged = merge_logs(edge, cloud);
    std::vector<TwinEventKind> kinds;
    for (const auto& e : merged.events) kinds.push_back(e.kind);
    std::vector<TwinEventKind> expected = {
        TwinEventKind::soc_inference, TwinEventKind::upload,        TwinEventKind::soh_estimate,
        TwinEventKind::trigger_fired, TwinEventKind::retrain_started, TwinEventKind::retrain_done,
        TwinEventKind::model_shipped, TwinEventKind::model_swapped,
    };
    CHECK(kinds == expected);
    for (std::size_t k = 0; k < merged.events.size(); ++k)
        CHECK(merged.events[k].event_time == static_cast<std::int64_t>(k));

    // a swap without a preceding model_swapped version bump is caught
    TwinRunLog bad = merged;
    bad.events.push_back(bad.events[7]);  // duplicate model_swapped v2
    CHECK(!bad.invariant_violations().empty());
}

TEST_CASE("run log jsonl round-trips") {
    TwinRunLog log;
    log.append("edge", TwinEventKind::soc_inference, 0, {{"model_version", 1}});
    log.append("cloud", TwinEventKind::soh_estimate, 0, {{"soh_pct", 97.5}});
    TwinRunLog back = TwinRunLog::from_jsonl(log.to_jsonl());
    CHECK(back.to_jsonl() == log.to_jsonl());
}
