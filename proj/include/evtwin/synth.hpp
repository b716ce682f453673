#pragma once

// Deterministic synthetic aging battery. Each scheduled SOH value yields
// one constant-current reference discharge whose capacity shrinks with SOH
// and whose terminal voltage sags as internal resistance grows, so aging
// both shortens the discharge and reshapes the voltage curve.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtwin/dataset.hpp"
#include "evtwin/rng.hpp"

namespace evtwin {

struct SynthParams {
    double rated_capacity_ah = 2.1;
    // open-circuit voltage vs SOC fraction s in [0,1]:
    // v = c0 + c1*s + c2*s^2 + c3*s^3; defaults pass through
    // (0%, 3.0 V), (50%, 3.7 V), (100%, 4.2 V)
    std::array<double, 4> ocv_coefficients{3.0, 1.6, -0.4, 0.0};
    double r_internal_nominal_ohm = 0.05;
    // R(soh) = r_nominal * (1 + r_growth * (100 - soh)/100)
    double r_growth = 1.0;
    double discharge_current_a = 1.05;
    double sample_period_s = 10.0;
    std::vector<double> soh_schedule_pct;  // non-increasing
    double noise_sigma_v = 0.0;
    // below OCV(0) minus the worst-case IR drop, so nominal runs end by
    // capacity exhaustion rather than early cutoff
    double cutoff_voltage_v = 2.7;
    double ambient_temp_c = 25.0;
    double temp_rise_c = 5.0;
    std::uint64_t seed = 0;
    std::string battery_id = "SYN0";
};

inline double ocv_voltage(const std::array<double, 4>& c, double soc_fraction) {
    const double s = soc_fraction;
    return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
}

inline Dataset generate_lifetime(const SynthParams& p) {
    if (!(p.rated_capacity_ah > 0.0)) throw std::invalid_argument("rated capacity must be > 0");
    if (!(p.discharge_current_a > 0.0)) throw std::invalid_argument("discharge current must be > 0");
    if (!(p.sample_period_s > 0.0)) throw std::invalid_argument("sample period must be > 0");
    if (p.noise_sigma_v < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    if (p.soh_schedule_pct.empty()) throw std::invalid_argument("empty soh schedule");
    for (std::size_t k = 0; k < p.soh_schedule_pct.size(); ++k) {
        if (!(p.soh_schedule_pct[k] > 0.0))
            throw std::invalid_argument("soh schedule entries must be > 0");
        if (k > 0 && p.soh_schedule_pct[k] > p.soh_schedule_pct[k - 1])
            throw std::invalid_argument("soh schedule must be non-increasing");
    }

    Rng rng(p.seed);
    Dataset ds;
    ds.rated_capacity_ah = p.rated_capacity_ah;
    auto& cycles = ds.batteries[p.battery_id];
    for (std::size_t k = 0; k < p.soh_schedule_pct.size(); ++k) {
        const double soh = p.soh_schedule_pct[k];
        const double capacity_ah = soh / 100.0 * p.rated_capacity_ah;
        const double r_ohm = p.r_internal_nominal_ohm * (1.0 + p.r_growth * (100.0 - soh) / 100.0);
        const double t_end_s = 3600.0 * capacity_ah / p.discharge_current_a;

        Cycle c;
        c.battery_id = p.battery_id;
        c.cycle_index = static_cast<int>(k);
        const long full_steps = static_cast<long>(t_end_s / p.sample_period_s);
        // an explicit final sample at t_end unless it already sits on the grid
        const bool tail_sample =
            t_end_s - static_cast<double>(full_steps) * p.sample_period_s > 1e-9;
        for (long step = 0; step <= full_steps + (tail_sample ? 1 : 0); ++step) {
            const bool last = step > full_steps;
            const double t = last ? t_end_s : static_cast<double>(step) * p.sample_period_s;
            const double drawn_ah = p.discharge_current_a * t / 3600.0;
            const double soc_fraction = std::max(0.0, 1.0 - drawn_ah / capacity_ah);
            double v = ocv_voltage(p.ocv_coefficients, soc_fraction) -
                       p.discharge_current_a * r_ohm;
            if (p.noise_sigma_v > 0.0) v += p.noise_sigma_v * rng.gaussian();
            if (!c.samples.empty() && v <= p.cutoff_voltage_v) break;  // cutoff reached
            Sample s;
            s.relative_time_s = t;
            s.voltage_v = v;
            s.current_a = p.discharge_current_a;
            s.temperature_c = p.ambient_temp_c + p.temp_rise_c * (1.0 - soc_fraction);
            c.samples.push_back(s);
        }
        cycles.push_back(std::move(c));
    }
    return ds;
}

// Evenly spaced schedule from `from` down to `to` (inclusive).
inline std::vector<double> linear_soh_schedule(double from, double to, std::size_t n_cycles) {
    if (n_cycles < 2 || !(from >= to)) throw std::invalid_argument("bad soh schedule spec");
    std::vector<double> schedule(n_cycles);
    for (std::size_t k = 0; k < n_cycles; ++k)
        schedule[k] = from + (to - from) * static_cast<double>(k) / static_cast<double>(n_cycles - 1);
    return schedule;
}

}  // namespace evtwin
