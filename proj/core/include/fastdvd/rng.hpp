#pragma once

#include <cmath>
#include <cstdint>

namespace fastdvd {

// Splittable counter-style generator (splitmix64). Streams derived with
// derive() are independent of each other and of evaluation order, which is
// what makes per-frame and per-sample noise reproducible under any schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi] (closed at both ends up to fp rounding).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller; deterministic across platforms,
    // unlike std::normal_distribution.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Independent child stream; mixing the key through splitmix64 keeps
    // derived streams decorrelated even for adjacent keys.
    Rng derive(std::uint64_t key) const {
        Rng mixer(state_ ^ (0xd1b54a32d192ed03ULL * (key + 1)));
        return Rng(mixer.next_u64());
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace fastdvd
