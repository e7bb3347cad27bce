#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wrf/geometry.hpp"

namespace wrf {

// Seeded generator with fixed output mapping. std::*_distribution is
// implementation-defined, so uniform/normal are derived here directly to keep
// outputs stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    double uniform() {
        const std::uint64_t hi = engine_();
        const std::uint64_t lo = engine_();
        return static_cast<double>(((hi << 21) ^ lo) & ((1ull << 53) - 1)) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    std::uint32_t next_u32() { return engine_(); }

    // Fisher-Yates index shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform() * static_cast<double>(i));
            std::swap(v[i - 1], v[j < i ? j : i - 1]);
        }
    }

private:
    std::mt19937 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wrf
