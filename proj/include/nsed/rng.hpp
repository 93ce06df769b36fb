#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace nsed {

// Seeded generator with portable derivations. std::uniform_int_distribution
// is implementation-defined, so bounded draws and shuffles are done by hand;
// outputs are then reproducible across standard libraries, which the
// byte-identical-rerun contract relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_u64(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(uniform_u64(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform_real() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform_real() < p; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform_real();
        double u2 = uniform_real();
        while (u1 <= 1e-300) u1 = uniform_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Child generator for an independent substream.
    Rng fork(std::uint64_t stream) {
        Rng child(state_ ^ (0x517cc1b727220a95ull * (stream + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
};

} // namespace nsed
