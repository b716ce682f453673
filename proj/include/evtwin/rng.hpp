#pragma once

// Self-contained deterministic RNG. std::shuffle and the standard
// distributions are not bit-specified across library implementations,
// which would make model artifacts and run logs differ between builds.

#include <cmath>
#include <cstdint>
#include <vector>

namespace evtwin {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n), n > 0; Lemire rejection keeps it unbiased
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            std::uint64_t t = (0 - n) % n;
            while (low < t) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // standard normal via Box-Muller, one spare cached
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stable derivation of substream seeds (per tree, per fold, per retrain)
// so parallel or reordered execution cannot change results.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return r.next_u64();
}

}  // namespace evtwin
