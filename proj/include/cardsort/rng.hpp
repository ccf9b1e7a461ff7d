#pragma once

#include <cstdint>
#include <vector>

namespace cardsort {

// Deterministic 64-bit generator (SplitMix64). All randomized procedures in
// the library draw from this generator so that identical seeds reproduce
// identical results on every platform; the standard <random> distributions
// are implementation-defined and are deliberately not used.
//
// Stream splitting rule: substream k of a generator seeded with s is a fresh
// generator seeded with mix64(s, k). Nested splits compose, e.g. the draw for
// bootstrap iteration i at sample size n uses seed -> substream(n) ->
// substream(i). Participant-level simulation uses participant index as the
// substream id.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, n) by rejection sampling.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    Rng substream(std::uint64_t id) const { return Rng(mix64(seed_, id)); }

    std::uint64_t seed() const noexcept { return seed_; }

    static std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace cardsort
