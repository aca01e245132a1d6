#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace urdcop {

/// splitmix64 step; used to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return splitmix64(s);
}

/// Deterministic random source. The engine is std::mt19937_64 (a fully
/// specified, portable algorithm) and every distribution below is hand-rolled
/// so that identical seeds produce identical streams on any platform with
/// IEEE-754 doubles.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 bits of randomness.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Uniform integer in [0, bound). Fixed-point multiply, no rejection.
    int next_int(int bound) {
        return static_cast<int>(
            (static_cast<unsigned __int128>(next_u64()) *
             static_cast<unsigned __int128>(bound)) >> 64);
    }

    /// Box-Muller without caching the second variate; two uniforms per call.
    double next_normal(double mean, double stddev) {
        double u1 = 1.0 - next_unit(); // (0, 1], keeps log finite
        double u2 = next_unit();
        double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
        return mean + stddev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int k = next_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(k)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace urdcop
