#ifndef DCVACONF_RANDOM_HPP
#define DCVACONF_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dcvaconf {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent 64-bit key from a parent key and a counter.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(parent) ^ splitmix64(counter ^ 0xD1B54A32D192ED03ULL));
}

/// Uniform double in (0, 1] from the top 53 bits of a word.
constexpr double unit_open_closed(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Counter-based random source: every draw is a pure function of
/// (key, index), so draws can be taken in any order or in parallel.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t key() const noexcept { return key_; }

    constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
        return splitmix64(key_ ^ splitmix64(index));
    }

    constexpr double uniform(std::uint64_t index) const noexcept { return unit_open_closed(bits(index)); }

    /// Standard normal via Box-Muller on two sub-draws of `index`.
    double normal(std::uint64_t index) const noexcept {
        const double u1 = unit_open_closed(bits(2 * index));
        const double u2 = unit_open_closed(bits(2 * index + 1));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

/// Sequential convenience wrapper over CounterRng for code that draws in a
/// fixed program order (scene generation, weight init).
class SeqRng {
public:
    explicit constexpr SeqRng(std::uint64_t key) noexcept : rng_(key) {}

    double uniform() noexcept { return rng_.uniform(next_++); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept { return rng_.normal(next_++); }

    /// Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi) noexcept {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(rng_.bits(next_++) % span);
    }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

}  // namespace dcvaconf

#endif
