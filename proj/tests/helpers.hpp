#pragma once

// Shared fixtures for the unit suites.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "evtwin/dataset.hpp"
#include "evtwin/labeling.hpp"

namespace testutil {

// Constant-current discharge cycle sampled every `dt` seconds.
inline evtwin::Cycle constant_current_cycle(const std::string& battery, int index, double current_a,
                                            double duration_s, double dt = 60.0,
                                            double voltage = 3.7, double temp = 25.0) {
    evtwin::Cycle c;
    c.battery_id = battery;
    c.cycle_index = index;
    for (double t = 0.0;; t += dt) {
        if (t > duration_s) t = duration_s;
        evtwin::Sample s;
        s.relative_time_s = t;
        s.voltage_v = voltage;
        s.current_a = current_a;
        s.temperature_c = temp;
        c.samples.push_back(s);
        if (t >= duration_s) break;
    }
    return c;
}

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / ("evtwin_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

}  // namespace testutil
