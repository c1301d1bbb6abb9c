#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ikami {

// Counter-based splitmix64 generator. All randomness in the toolkit flows
// through this so that trajectories are reproducible from a single u64 seed
// and the generator state serializes as one number.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    int index(std::size_t n) { return static_cast<int>(next_below(n)); }

    // Fisher-Yates over an index vector.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Sample k distinct indices out of [0, n) in selection order.
    std::vector<int> sample_without_replacement(std::size_t n, std::size_t k);

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

    // Independent child stream, e.g. per-epoch or per-purpose.
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t state_;
};

// FNV-1a over bytes; used for name-feature hashing.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace ikami
