#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

namespace hivesig {

// Finalizer of the splitmix64 generator. Bijective on 64-bit words.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a base seed and a salt.
inline uint64_t seed_stream(uint64_t seed, uint64_t salt) {
    return mix64(seed + 0x9e3779b97f4a7c15ull * (salt + 1));
}

// FNV-1a, for turning tensor/layer names into stream salts. std::hash is
// not pinned across standard libraries; this is.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// Stateless uniform in [0,1) for counter-indexed draws (dropout masks).
// The same (seed, index) pair always yields the same value, in any order.
inline double uniform_at(uint64_t seed, uint64_t index) {
    return static_cast<double>(mix64(seed + 0x9e3779b97f4a7c15ull * (index + 1)) >> 11) * 0x1.0p-53;
}

// Small deterministic RNG used everywhere instead of <random>, whose
// distributions are not pinned across standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Lemire multiply-shift; slight bias is
    // irrelevant here, determinism is what matters.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            const uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hivesig
