#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace settle {

/// Counter-based generator: the i-th draw of stream `key` is
///
///     z = key + (i + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     return z ^ (z >> 31)
///
/// which is SplitMix64 evaluated at an explicit counter. Doubles take the top
/// 53 bits, bounded integers use the high half of a 128-bit product, normals
/// use Box-Muller on two consecutive doubles. None of this goes through the
/// standard library distributions, whose output is implementation-defined.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(key), counter_(counter) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t at(std::uint64_t key, std::uint64_t counter) noexcept {
        return mix(key + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    }

    /// Seed of an independent sub-stream, e.g. one per worker or per fold.
    static constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t stream) noexcept {
        return mix(key ^ mix(stream + 0x632BE59BD9B4E019ULL));
    }

    std::uint64_t next_u64() noexcept { return at(key_, counter_++); }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    double normal() noexcept {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace settle
