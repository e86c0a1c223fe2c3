#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace waver {

// Deterministic 64-bit generator (splitmix64). All randomness in the project
// flows through this so runs are reproducible bit-for-bit from one seed.
class splitmix64 {
public:
    explicit splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), exactly representable (53-bit mantissa).
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform in [-1, 1).
    double next_symmetric() {
        return 2.0 * next_unit() - 1.0;
    }

    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : next() % n;
    }

private:
    std::uint64_t state_;
};

// FNV-1a over bytes, passed through one splitmix64 round to spread low bits.
inline std::uint64_t hash64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(h).next();
}

// Named sub-stream of a run seed; adding a consumer never perturbs others.
inline splitmix64 named_stream(std::uint64_t seed, std::string_view name) {
    return splitmix64(seed ^ hash64(name));
}

// In-place Fisher-Yates with an explicit generator (std::shuffle is not
// reproducible across standard library implementations).
template <typename T>
void deterministic_shuffle(std::span<T> items, splitmix64 & rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace waver
