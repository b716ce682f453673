#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "evtwin/labeling.hpp"
#include "evtwin/synth.hpp"

using namespace evtwin;

namespace {

SynthParams default_params() {
    SynthParams p;
    p.soh_schedule_pct = {100.0, 90.0, 80.0, 70.0};
    p.sample_period_s = 10.0;
    return p;
}

}  // namespace

TEST_CASE("discharge duration scales with scheduled SOH") {
    SynthParams p = default_params();
    p.soh_schedule_pct = {100.0, 70.0};
    Dataset ds = generate_lifetime(p);
    const auto& cycles = ds.batteries.at(p.battery_id);
    REQUIRE(cycles.size() == 2);
    double d100 = cycles[0].duration_s();
    double d70 = cycles[1].duration_s();
    CHECK_THAT(d70 / d100, Catch::Matchers::WithinAbs(0.70, 0.01 * 0.70));
}

TEST_CASE("noise-free cycles have strictly decreasing voltage") {
    SynthParams p = default_params();
    p.noise_sigma_v = 0.0;
    Dataset ds = generate_lifetime(p);
    for (const auto& [battery, cycles] : ds.batteries) {
        for (const auto& c : cycles) {
            REQUIRE(c.samples.size() > 10);
            for (std::size_t k = 1; k < c.samples.size(); ++k)
                CHECK(c.samples[k].voltage_v < c.samples[k - 1].voltage_v);
        }
    }
}

TEST_CASE("coulomb counting the generated cycles recovers the schedule") {
    SynthParams p = default_params();
    Dataset ds = generate_lifetime(p);
    const auto& cycles = ds.batteries.at(p.battery_id);
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        double soh = compute_soh(cycle_capacity(cycles[k]), p.rated_capacity_ah);
        CHECK_THAT(soh, Catch::Matchers::WithinAbs(p.soh_schedule_pct[k], 0.5));
    }
}

TEST_CASE("labeling round-trip reproduces the schedule and removes nothing") {
    SynthParams p = default_params();
    p.soh_schedule_pct = linear_soh_schedule(100.0, 75.0, 26);
    Dataset ds = generate_lifetime(p);
    LabeledDataset labeled = build_labeled_dataset(ds, 0.0);
    CHECK(labeled.removed_cycles.empty());
    const auto& cycles = labeled.batteries.at(p.battery_id);
    REQUIRE(cycles.size() == 26);
    for (std::size_t k = 0; k < cycles.size(); ++k)
        CHECK_THAT(cycles[k].soh_pct, Catch::Matchers::WithinAbs(p.soh_schedule_pct[k], 0.5));
}

TEST_CASE("terminal voltage at fixed SOC drops as SOH decreases") {
    SynthParams p = default_params();
    p.noise_sigma_v = 0.0;
    Dataset ds = generate_lifetime(p);
    const auto& cycles = ds.batteries.at(p.battery_id);
    // compare voltage at SOC 50% across cycles via linear interpolation
    auto voltage_at_soc50 = [&](const Cycle& c, double soh) {
        double capacity_as = soh / 100.0 * p.rated_capacity_ah * 3600.0;
        double t_half = 0.5 * capacity_as / p.discharge_current_a;
        for (std::size_t k = 1; k < c.samples.size(); ++k) {
            if (c.samples[k].relative_time_s >= t_half) {
                const auto& a = c.samples[k - 1];
                const auto& b = c.samples[k];
                double w = (t_half - a.relative_time_s) / (b.relative_time_s - a.relative_time_s);
                return a.voltage_v + w * (b.voltage_v - a.voltage_v);
            }
        }
        return c.samples.back().voltage_v;
    };
    double prev = 1e9;
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        double v = voltage_at_soc50(cycles[k], p.soh_schedule_pct[k]);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("generation is deterministic per seed") {
    SynthParams p = default_params();
    p.noise_sigma_v = 0.01;
    p.seed = 42;
    Dataset a = generate_lifetime(p);
    Dataset b = generate_lifetime(p);
    CHECK(a == b);
    p.seed = 43;
    Dataset c = generate_lifetime(p);
    CHECK(!(a == c));
}

TEST_CASE("generated datasets pass validation and parameter checks hold") {
    SynthParams p = default_params();
    p.noise_sigma_v = 0.005;
    Dataset ds = generate_lifetime(p);
    CHECK(validate_dataset(ds).empty());

    SynthParams bad = default_params();
    bad.soh_schedule_pct = {90.0, 95.0};
    CHECK_THROWS_AS(generate_lifetime(bad), std::invalid_argument);
    bad = default_params();
    bad.soh_schedule_pct.clear();
    CHECK_THROWS_AS(generate_lifetime(bad), std::invalid_argument);
    bad = default_params();
    bad.discharge_current_a = 0.0;
    CHECK_THROWS_AS(generate_lifetime(bad), std::invalid_argument);
}
