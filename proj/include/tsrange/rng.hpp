#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tsrange {

/// Deterministic random stream: a seeded mt19937_64 engine (output sequence
/// fixed by the C++ standard) with hand-rolled uniform/normal transforms so
/// that draws do not depend on the standard library's distribution
/// implementations. Identical seed -> identical sequence on every build.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform on (lo, hi]; used for strictly positive quantities.
    double uniform_open_closed(double lo, double hi) {
        return hi - (hi - lo) * uniform();
    }

    /// Zero-mean Gaussian with standard deviation sigma (Box-Muller,
    /// spare value cached). sigma == 0 returns 0 without consuming draws.
    double normal(double sigma) {
        if (sigma == 0.0) return 0.0;
        return sigma * unit_normal();
    }

    double unit_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] keeps the log finite
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tsrange
