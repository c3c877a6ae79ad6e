#ifndef CIRREGIME_RNG_HPP
#define CIRREGIME_RNG_HPP

#include <cstdint>
#include <random>

namespace cirregime {

/// SplitMix64 mixing step (Steele, Lea, Flood). Used as a counter-based
/// hash from (master seed, stream index) to an engine seed, so that
/// per-path streams are independent of scheduling and worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-stream engine: stream `index` of master seed `seed`.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = splitmix64(splitmix64(seed) ^ splitmix64(index * 0x632be59bd9b4e019ULL + 1));
    return std::mt19937_64(s);
}

inline double draw_uniform(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(std::mt19937_64& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_exponential(std::mt19937_64& rng, double rate) {
    return std::exponential_distribution<double>(rate)(rng);
}

inline long draw_poisson(std::mt19937_64& rng, double mean) {
    return std::poisson_distribution<long>(mean)(rng);
}

inline double draw_gamma(std::mt19937_64& rng, double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(rng);
}

} // namespace cirregime

#endif
