#pragma once

// SOC/SOH labeling of reference discharge cycles.
//
// SOC comes from Coulomb counting: trapezoidal integration of the discharge
// current over relative time, measured against the cycle's own available
// capacity. SOH is the ratio of that available capacity to the rated
// capacity; it is constant within one discharge cycle and only moves from
// cycle to cycle. A greedy forward pass drops cycles whose SOH breaks the
// monotonic decreasing aging profile (measurement artifacts).

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "evtwin/dataset.hpp"

namespace evtwin {

// |i| below this is treated as zero during discharge integration; rest
// periods show small negative sensor noise.
inline constexpr double kCurrentNoiseFloorA = 0.01;

struct LabeledCycle {
    Cycle cycle;
    std::vector<double> soc_pct;  // aligned with cycle.samples, non-increasing
    double soh_pct = 0.0;         // constant across the cycle
    double available_capacity_ah = 0.0;

    bool operator==(const LabeledCycle&) const = default;
};

struct RemovedCycle {
    std::string battery_id;
    int cycle_index = 0;
    std::string reason;

    bool operator==(const RemovedCycle&) const = default;
};

struct LabeledDataset {
    std::map<std::string, std::vector<LabeledCycle>> batteries;
    double rated_capacity_ah = 2.1;
    std::vector<RemovedCycle> removed_cycles;

    bool operator==(const LabeledDataset&) const = default;

    std::size_t total_cycles() const {
        std::size_t n = 0;
        for (const auto& [id, cycles] : batteries) n += cycles.size();
        return n;
    }

    std::size_t total_samples() const {
        std::size_t n = 0;
        for (const auto& [id, cycles] : batteries)
            for (const auto& c : cycles) n += c.cycle.samples.size();
        return n;
    }
};

namespace detail {

inline double discharge_current(const Sample& s, const Cycle& c, std::size_t k) {
    double i = s.current_a;
    if (i < -kCurrentNoiseFloorA)
        throw std::invalid_argument("not a discharge cycle: current " + csv::format_double(i) +
                                    " A at sample " + std::to_string(k) + " of battery " +
                                    c.battery_id + " cycle " + std::to_string(c.cycle_index));
    return i < 0.0 ? 0.0 : i;
}

}  // namespace detail

// Charge drawn up to each sample, ampere-seconds, trapezoidal rule.
inline std::vector<double> integrate_drawn_charge_as(const Cycle& cycle) {
    if (cycle.samples.empty()) throw std::invalid_argument("empty cycle");
    std::vector<double> drawn(cycle.samples.size(), 0.0);
    double prev_t = cycle.samples[0].relative_time_s;
    double prev_i = detail::discharge_current(cycle.samples[0], cycle, 0);
    double acc = 0.0;
    for (std::size_t k = 1; k < cycle.samples.size(); ++k) {
        const Sample& s = cycle.samples[k];
        double i = detail::discharge_current(s, cycle, k);
        acc += 0.5 * (i + prev_i) * (s.relative_time_s - prev_t);
        drawn[k] = acc;
        prev_t = s.relative_time_s;
        prev_i = i;
    }
    return drawn;
}

inline std::vector<double> coulomb_count(const Cycle& cycle, double available_capacity_ah) {
    if (!(available_capacity_ah > 0.0))
        throw std::invalid_argument("available capacity must be > 0");
    auto drawn = integrate_drawn_charge_as(cycle);
    const double q_as = available_capacity_ah * 3600.0;
    std::vector<double> soc(drawn.size());
    for (std::size_t k = 0; k < drawn.size(); ++k)
        soc[k] = std::clamp(100.0 * (q_as - drawn[k]) / q_as, 0.0, 100.0);
    return soc;
}

// Total available discharge capacity at the end of the cycle, Ah.
inline double cycle_capacity(const Cycle& cycle) {
    return integrate_drawn_charge_as(cycle).back() / 3600.0;
}

inline double compute_soh(double available_capacity_ah, double rated_capacity_ah) {
    if (!(available_capacity_ah > 0.0)) throw std::invalid_argument("available capacity must be > 0");
    if (!(rated_capacity_ah > 0.0)) throw std::invalid_argument("rated capacity must be > 0");
    // deliberately not clamped: >100% noise must stay visible for cleaning
    return 100.0 * available_capacity_ah / rated_capacity_ah;
}

struct CleanResult {
    std::vector<std::size_t> retained;  // positions into the input list
    std::vector<std::size_t> removed;
};

// Greedy forward pass: keep cycle i iff soh_i <= last retained SOH + epsilon.
// The first cycle is always kept.
inline CleanResult clean_monotonic(const std::vector<std::pair<int, double>>& soh_by_cycle,
                                   double epsilon_pct) {
    CleanResult res;
    if (soh_by_cycle.empty()) return res;
    res.retained.push_back(0);
    double last = soh_by_cycle[0].second;
    for (std::size_t i = 1; i < soh_by_cycle.size(); ++i) {
        if (soh_by_cycle[i].second <= last + epsilon_pct) {
            res.retained.push_back(i);
            last = soh_by_cycle[i].second;
        } else {
            res.removed.push_back(i);
        }
    }
    return res;
}

inline LabeledCycle label_cycle(const Cycle& cycle, double rated_capacity_ah) {
    LabeledCycle lc;
    lc.available_capacity_ah = cycle_capacity(cycle);
    lc.soh_pct = compute_soh(lc.available_capacity_ah, rated_capacity_ah);
    lc.soc_pct = coulomb_count(cycle, lc.available_capacity_ah);
    lc.cycle = cycle;
    return lc;
}

inline LabeledDataset build_labeled_dataset(const Dataset& d, double epsilon_pct = 0.0) {
    if (!(d.rated_capacity_ah > 0.0)) throw std::invalid_argument("rated capacity must be > 0");
    LabeledDataset out;
    out.rated_capacity_ah = d.rated_capacity_ah;
    for (const auto& [battery, cycles] : d.batteries) {
        if (cycles.empty()) throw std::invalid_argument("battery " + battery + " has no cycles");
        std::vector<std::pair<int, double>> soh_seq;
        std::vector<double> capacities;
        soh_seq.reserve(cycles.size());
        for (const auto& c : cycles) {
            double cap = cycle_capacity(c);
            capacities.push_back(cap);
            soh_seq.emplace_back(c.cycle_index, compute_soh(cap, d.rated_capacity_ah));
        }
        auto clean = clean_monotonic(soh_seq, epsilon_pct);
        for (std::size_t pos : clean.removed)
            out.removed_cycles.push_back({battery, cycles[pos].cycle_index, "soh_monotonicity"});
        auto& labeled = out.batteries[battery];
        for (std::size_t pos : clean.retained) {
            LabeledCycle lc;
            lc.cycle = cycles[pos];
            lc.available_capacity_ah = capacities[pos];
            lc.soh_pct = soh_seq[pos].second;
            lc.soc_pct = coulomb_count(cycles[pos], capacities[pos]);
            labeled.push_back(std::move(lc));
        }
    }
    return out;
}

inline const char* kLabeledHeader =
    "battery_id,cycle_index,relative_time_s,voltage_v,current_a,temperature_c,soc_pct,soh_pct";

inline void write_labeled_csv(const LabeledDataset& d, const std::string& path) {
    std::string out;
    out.reserve(80 * (d.total_samples() + 1));
    out += kLabeledHeader;
    out += '\n';
    for (const auto& [battery, cycles] : d.batteries) {
        for (const auto& lc : cycles) {
            for (std::size_t k = 0; k < lc.cycle.samples.size(); ++k) {
                const Sample& s = lc.cycle.samples[k];
                out += battery;
                out += ',';
                out += std::to_string(lc.cycle.cycle_index);
                out += ',';
                out += csv::format_double(s.relative_time_s);
                out += ',';
                out += csv::format_double(s.voltage_v);
                out += ',';
                out += csv::format_double(s.current_a);
                out += ',';
                out += csv::format_double(s.temperature_c);
                out += ',';
                out += csv::format_double(lc.soc_pct[k]);
                out += ',';
                out += csv::format_double(lc.soh_pct);
                out += '\n';
            }
        }
    }
    csv::write_file(path, out);
}

inline LabeledDataset read_labeled_csv(const std::string& path, double rated_capacity_ah = 2.1) {
    if (!(rated_capacity_ah > 0.0)) throw std::invalid_argument("rated capacity must be > 0");
    auto lines = csv::read_lines(path);
    if (lines.empty()) throw ParseError(path, 1, "empty file");
    if (csv::trim(lines[0]) != kLabeledHeader)
        throw ParseError(path, 1, std::string("expected header '") + kLabeledHeader + "'");

    struct Row {
        Sample sample;
        double soc = 0.0;
        double soh = 0.0;
    };
    std::map<std::pair<std::string, int>, std::vector<Row>> groups;
    long data_rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const long line_no = static_cast<long>(i) + 1;
        std::string_view line = csv::trim(lines[i]);
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != 8)
            throw ParseError(path, line_no, "expected 8 fields, got " + std::to_string(fields.size()));
        std::string battery(csv::trim(fields[0]));
        long long idx = 0;
        Row r;
        if (battery.empty() || !csv::parse_int(fields[1], idx) || idx < 0 ||
            !csv::parse_double(fields[2], r.sample.relative_time_s) ||
            !csv::parse_double(fields[3], r.sample.voltage_v) ||
            !csv::parse_double(fields[4], r.sample.current_a) ||
            !csv::parse_double(fields[5], r.sample.temperature_c) ||
            !csv::parse_double(fields[6], r.soc) || !csv::parse_double(fields[7], r.soh))
            throw ParseError(path, line_no, "malformed row");
        auto& rows = groups[{battery, static_cast<int>(idx)}];
        if (!rows.empty()) {
            if (!(r.sample.relative_time_s > rows.back().sample.relative_time_s))
                throw ParseError(path, line_no, "non-monotonic time in battery " + battery +
                                                    " cycle " + std::to_string(idx));
            if (r.soh != rows.back().soh)
                throw ParseError(path, line_no, "soh_pct varies within battery " + battery +
                                                    " cycle " + std::to_string(idx));
        }
        rows.push_back(r);
        ++data_rows;
    }
    if (data_rows == 0) throw ParseError(path, static_cast<long>(lines.size()), "no data rows");

    LabeledDataset out;
    out.rated_capacity_ah = rated_capacity_ah;
    for (auto& [key, rows] : groups) {
        LabeledCycle lc;
        lc.cycle.battery_id = key.first;
        lc.cycle.cycle_index = key.second;
        lc.soh_pct = rows[0].soh;
        lc.available_capacity_ah = lc.soh_pct * rated_capacity_ah / 100.0;
        for (const Row& r : rows) {
            lc.cycle.samples.push_back(r.sample);
            lc.soc_pct.push_back(r.soc);
        }
        out.batteries[key.first].push_back(std::move(lc));
    }
    return out;
}

inline nlohmann::json removed_cycles_json(const LabeledDataset& d) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rc : d.removed_cycles)
        arr.push_back({{"battery_id", rc.battery_id},
                       {"cycle_index", rc.cycle_index},
                       {"reason", rc.reason}});
    return arr;
}

}  // namespace evtwin
