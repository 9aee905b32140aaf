#pragma once

//
// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter) through the SplitMix64 finalizer, so results do
// not depend on the standard library's distribution implementations and
// independent streams can be evaluated in any order or in parallel.
//

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lplr {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// SplitMix64 as a counter-based generator: value(i) = mix(seed' + (i+1)·γ).
class CounterRng {
public:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

    explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(splitmix64_mix(seed ^ splitmix64_mix(stream + golden_gamma)))
    {
    }

    /// Raw 64-bit output at an arbitrary counter position.
    constexpr std::uint64_t at(std::uint64_t counter) const noexcept
    {
        return splitmix64_mix(key_ + (counter + 1) * golden_gamma);
    }

    std::uint64_t next_u64() noexcept { return at(counter_++); }

    /// Uniform in the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        // Lemire's multiply-shift; the bias is < bound / 2^64.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    double gaussian() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Standard Cauchy variate.
    double cauchy() noexcept { return std::tan(std::numbers::pi * (uniform() - 0.5)); }

    /// Symmetric alpha-stable variate (unit scale), Chambers-Mallows-Stuck.
    double symmetric_stable(double alpha) noexcept
    {
        if (alpha == 2.0)
            return std::numbers::sqrt2 * gaussian();
        if (alpha == 1.0)
            return cauchy();
        const double v = std::numbers::pi * (uniform() - 0.5);
        const double w = -std::log(uniform());
        return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha)
             * std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
    }

    double sign() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace lplr
