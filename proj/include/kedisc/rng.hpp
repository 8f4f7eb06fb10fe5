#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace kedisc {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) noexcept
{
    return mix64(seed ^ mix64(a + 0x632be59bd9b4e019ULL));
}

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, Rest... rest) noexcept
{
    return derive_seed(derive_seed(seed, a), static_cast<std::uint64_t>(rest)...);
}

// Random source with platform-independent output. The std distributions are
// implementation-defined, so uniform/normal conversions are done by hand on
// top of mt19937_64 (whose sequence the standard fixes).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n)
    {
        auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller; 1 - u keeps the log argument in (0, 1].
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Categorical draw proportional to non-negative weights. Equal weights
    // reduce to index(n) so weighted and unweighted operators consume the
    // stream identically.
    std::size_t categorical(std::span<const double> weights)
    {
        const std::size_t n = weights.size();
        bool equal = true;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += weights[i];
            if (weights[i] != weights[0]) equal = false;
        }
        if (equal || !(total > 0.0)) return index(n);
        double r = uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (weights[i] <= 0.0) continue;
            last_positive = i;
            acc += weights[i];
            if (r < acc) return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kedisc
