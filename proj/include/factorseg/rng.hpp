#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "factorseg/errors.hpp"

namespace factorseg {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace detail

/// Derives an independent substream seed from a master seed and a path of
/// integers (replicate index, stream role, ...). The derivation is a pure
/// function, so parallel consumers get schedule-independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = detail::mix64(master + 0x9E3779B97F4A7C15ull);
    for (std::uint64_t p : path) {
        h = detail::mix64(h ^ detail::mix64(p + 0x9E3779B97F4A7C15ull));
    }
    return h;
}

/// xoshiro256++ with splitmix64 seeding. All variate generators are
/// hand-rolled from the raw stream so that output is reproducible
/// bit-for-bit regardless of the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) {
            x += 0x9E3779B97F4A7C15ull;
            s = detail::mix64(x);
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], both inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Standard normal via Box-Muller (stateless variant).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Student-t with `dof` degrees of freedom.
    double student_t(int dof) {
        double chi2 = 0.0;
        for (int i = 0; i < dof; ++i) {
            const double z = normal();
            chi2 += z * z;
        }
        return normal() / std::sqrt(chi2 / static_cast<double>(dof));
    }

    /// Geometric block length with support {1, 2, ...} and mean 1/p.
    std::int64_t geometric(double p) {
        if (!(p > 0.0) || p > 1.0) throw ConfigError("geometric: p must be in (0, 1]");
        if (p >= 1.0) return 1;
        const double u = uniform();  // [0, 1)
        const double len = std::floor(std::log1p(-u) / std::log1p(-p));
        if (!std::isfinite(len) || len < 0.0) return 1;
        if (len >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
        return 1 + static_cast<std::int64_t>(len);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace factorseg
