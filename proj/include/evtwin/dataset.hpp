#pragma once

// Canonical trace data model and the CSV interchange schema.
//
// One row per sample:
//   battery_id,cycle_index,relative_time_s,voltage_v,current_a,temperature_c
// Cycle boundaries are inferred from (battery_id, cycle_index). Within a
// cycle, rows must appear in strictly increasing relative_time order; cycle
// blocks themselves may appear in any order and may interleave across
// batteries.

#include <algorithm>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evtwin/csv.hpp"

namespace evtwin {

struct Sample {
    double relative_time_s = 0.0;
    double voltage_v = 0.0;
    double current_a = 0.0;  // sign convention: positive = discharge
    double temperature_c = 0.0;

    bool operator==(const Sample&) const = default;
};

enum class CycleType { reference_discharge };

struct Cycle {
    std::string battery_id;
    int cycle_index = 0;
    CycleType type = CycleType::reference_discharge;
    std::vector<Sample> samples;

    bool operator==(const Cycle&) const = default;

    double duration_s() const {
        return samples.empty() ? 0.0 : samples.back().relative_time_s - samples.front().relative_time_s;
    }
};

struct Dataset {
    // cycles kept in chronological (cycle_index) order per battery
    std::map<std::string, std::vector<Cycle>> batteries;
    double rated_capacity_ah = 2.1;
    double rated_voltage_v = 4.2;

    bool operator==(const Dataset&) const = default;

    std::size_t total_cycles() const {
        std::size_t n = 0;
        for (const auto& [id, cycles] : batteries) n += cycles.size();
        return n;
    }

    std::size_t total_samples() const {
        std::size_t n = 0;
        for (const auto& [id, cycles] : batteries)
            for (const auto& c : cycles) n += c.samples.size();
        return n;
    }
};

struct ValidationBounds {
    double voltage_min_v = 0.0;
    double voltage_max_v = 6.0;
    double temperature_min_c = -30.0;
    double temperature_max_c = 80.0;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, long line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

    long line() const { return line_; }

private:
    long line_;
};

struct Violation {
    std::string battery_id;
    int cycle_index = 0;
    long sample_index = -1;  // -1 when the rule is not sample-scoped
    std::string rule;
    std::string detail;
};

inline const char* kTraceHeader = "battery_id,cycle_index,relative_time_s,voltage_v,current_a,temperature_c";

namespace detail {

inline std::string fmt2(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

}  // namespace detail

inline Dataset parse_traces(const std::string& path, double rated_capacity_ah = 2.1,
                            const ValidationBounds& bounds = {}) {
    if (!(rated_capacity_ah > 0.0)) throw std::invalid_argument("rated capacity must be > 0");
    auto lines = csv::read_lines(path);
    if (lines.empty()) throw ParseError(path, 1, "empty file");
    if (csv::trim(lines[0]) != kTraceHeader)
        throw ParseError(path, 1, std::string("expected header '") + kTraceHeader + "'");

    // (battery_id, cycle_index) -> samples, in encounter order
    std::map<std::pair<std::string, int>, std::vector<Sample>> groups;
    long data_rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const long line_no = static_cast<long>(i) + 1;
        std::string_view line = csv::trim(lines[i]);
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != 6)
            throw ParseError(path, line_no,
                             "expected 6 fields, got " + std::to_string(fields.size()));
        std::string battery(csv::trim(fields[0]));
        if (battery.empty()) throw ParseError(path, line_no, "empty battery_id");
        long long idx = 0;
        if (!csv::parse_int(fields[1], idx) || idx < 0)
            throw ParseError(path, line_no, "bad cycle_index '" + std::string(fields[1]) + "'");
        Sample s;
        if (!csv::parse_double(fields[2], s.relative_time_s))
            throw ParseError(path, line_no, "bad relative_time_s '" + std::string(fields[2]) + "'");
        if (!csv::parse_double(fields[3], s.voltage_v))
            throw ParseError(path, line_no, "bad voltage_v '" + std::string(fields[3]) + "'");
        if (!csv::parse_double(fields[4], s.current_a))
            throw ParseError(path, line_no, "bad current_a '" + std::string(fields[4]) + "'");
        if (!csv::parse_double(fields[5], s.temperature_c))
            throw ParseError(path, line_no, "bad temperature_c '" + std::string(fields[5]) + "'");

        if (s.relative_time_s < 0.0)
            throw ParseError(path, line_no, "relative_time_s must be >= 0");
        if (!(s.voltage_v > bounds.voltage_min_v && s.voltage_v < bounds.voltage_max_v))
            throw ParseError(path, line_no,
                             "voltage " + detail::fmt2(s.voltage_v) + " outside (" +
                                 detail::fmt2(bounds.voltage_min_v) + ", " +
                                 detail::fmt2(bounds.voltage_max_v) + ")");
        if (!(s.temperature_c > bounds.temperature_min_c && s.temperature_c < bounds.temperature_max_c))
            throw ParseError(path, line_no,
                             "temperature " + detail::fmt2(s.temperature_c) + " outside (" +
                                 detail::fmt2(bounds.temperature_min_c) + ", " +
                                 detail::fmt2(bounds.temperature_max_c) + ")");

        auto& samples = groups[{battery, static_cast<int>(idx)}];
        if (!samples.empty() && !(s.relative_time_s > samples.back().relative_time_s))
            throw ParseError(path, line_no,
                             "non-monotonic time in battery " + battery + " cycle " +
                                 std::to_string(idx) + " (" +
                                 csv::format_double(s.relative_time_s) + " after " +
                                 csv::format_double(samples.back().relative_time_s) + ")");
        samples.push_back(s);
        ++data_rows;
    }
    if (data_rows == 0) throw ParseError(path, static_cast<long>(lines.size()), "no data rows");

    Dataset ds;
    ds.rated_capacity_ah = rated_capacity_ah;
    for (auto& [key, samples] : groups) {
        Cycle c;
        c.battery_id = key.first;
        c.cycle_index = key.second;
        c.samples = std::move(samples);
        ds.batteries[key.first].push_back(std::move(c));
    }
    // std::map iteration already yields cycle_index ascending per battery
    return ds;
}

inline std::vector<Violation> validate_dataset(const Dataset& d, const ValidationBounds& bounds = {}) {
    std::vector<Violation> out;
    if (!(d.rated_capacity_ah > 0.0))
        out.push_back({"", 0, -1, "rated_capacity_positive",
                       "rated_capacity_ah = " + csv::format_double(d.rated_capacity_ah)});
    for (const auto& [battery, cycles] : d.batteries) {
        int prev_index = -1;
        bool first = true;
        for (const auto& c : cycles) {
            if (c.battery_id != battery)
                out.push_back({battery, c.cycle_index, -1, "battery_id_consistent",
                               "cycle carries battery_id '" + c.battery_id + "'"});
            if (!first && c.cycle_index == prev_index)
                out.push_back({battery, c.cycle_index, -1, "cycle_index_unique",
                               "duplicate cycle_index " + std::to_string(c.cycle_index)});
            else if (!first && c.cycle_index < prev_index)
                out.push_back({battery, c.cycle_index, -1, "cycle_order",
                               "cycle_index " + std::to_string(c.cycle_index) + " after " +
                                   std::to_string(prev_index)});
            prev_index = c.cycle_index;
            first = false;
            if (c.cycle_index < 0)
                out.push_back({battery, c.cycle_index, -1, "cycle_index_nonnegative", ""});
            if (c.samples.empty()) {
                out.push_back({battery, c.cycle_index, -1, "samples_nonempty", "cycle has no samples"});
                continue;
            }
            for (std::size_t k = 0; k < c.samples.size(); ++k) {
                const Sample& s = c.samples[k];
                const long sk = static_cast<long>(k);
                if (s.relative_time_s < 0.0)
                    out.push_back({battery, c.cycle_index, sk, "relative_time_nonnegative",
                                   csv::format_double(s.relative_time_s)});
                if (k > 0 && !(s.relative_time_s > c.samples[k - 1].relative_time_s))
                    out.push_back({battery, c.cycle_index, sk, "relative_time_monotonic",
                                   csv::format_double(s.relative_time_s) + " after " +
                                       csv::format_double(c.samples[k - 1].relative_time_s)});
                if (!(s.voltage_v > bounds.voltage_min_v && s.voltage_v < bounds.voltage_max_v))
                    out.push_back({battery, c.cycle_index, sk, "voltage_bound",
                                   "voltage " + detail::fmt2(s.voltage_v) + " outside (" +
                                       detail::fmt2(bounds.voltage_min_v) + ", " +
                                       detail::fmt2(bounds.voltage_max_v) + ")"});
                if (!(s.temperature_c > bounds.temperature_min_c &&
                      s.temperature_c < bounds.temperature_max_c))
                    out.push_back({battery, c.cycle_index, sk, "temperature_bound",
                                   "temperature " + detail::fmt2(s.temperature_c) + " outside (" +
                                       detail::fmt2(bounds.temperature_min_c) + ", " +
                                       detail::fmt2(bounds.temperature_max_c) + ")"});
            }
        }
    }
    return out;
}

inline void write_dataset(const Dataset& d, const std::string& path) {
    std::string out;
    out.reserve(64 * (d.total_samples() + 1));
    out += kTraceHeader;
    out += '\n';
    for (const auto& [battery, cycles] : d.batteries) {
        for (const auto& c : cycles) {
            for (const auto& s : c.samples) {
                out += battery;
                out += ',';
                out += std::to_string(c.cycle_index);
                out += ',';
                out += csv::format_double(s.relative_time_s);
                out += ',';
                out += csv::format_double(s.voltage_v);
                out += ',';
                out += csv::format_double(s.current_a);
                out += ',';
                out += csv::format_double(s.temperature_c);
                out += '\n';
            }
        }
    }
    csv::write_file(path, out);
}

// Keep only the listed batteries (cell selection is an operator input).
inline Dataset select_batteries(const Dataset& d, const std::vector<std::string>& ids) {
    Dataset out;
    out.rated_capacity_ah = d.rated_capacity_ah;
    out.rated_voltage_v = d.rated_voltage_v;
    for (const auto& id : ids) {
        auto it = d.batteries.find(id);
        if (it == d.batteries.end()) throw std::invalid_argument("unknown battery: " + id);
        out.batteries[id] = it->second;
    }
    return out;
}

}  // namespace evtwin
