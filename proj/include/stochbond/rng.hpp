#ifndef STOCHBOND_RNG_HPP
#define STOCHBOND_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stochbond {

// Counter-based substreams: every (seed, path, step) maps to an independent
// pair of standard normals, so path blocks can be generated in any order, on
// any number of workers, with identical output.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                  std::uint64_t lane) {
    std::uint64_t h = splitmix64(seed ^ 0xD1B54A32D192ED03ULL);
    h = splitmix64(h ^ path * 0x8CB92BA72F3D8DD7ULL);
    h = splitmix64(h ^ step * 0xABFB41BB43277EBFULL);
    return splitmix64(h ^ lane * 0x2545F4914F6CDD1DULL);
}

// uniform in the open interval (0, 1)
inline double to_uniform(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct NormalPair {
    double z1;
    double z2;
};

// Box-Muller on two counter-hashed uniforms.
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
    const double u1 = to_uniform(counter_hash(seed, path, step, 0));
    const double u2 = to_uniform(counter_hash(seed, path, step, 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

// One standard normal outside the path/step layout (basis draws, random states).
inline double normal(std::uint64_t seed, std::uint64_t idx) {
    return normal_pair(seed, idx, 0x5EEDFEEDULL).z1;
}

inline double uniform(std::uint64_t seed, std::uint64_t idx) {
    return to_uniform(counter_hash(seed, idx, 0xC0FFEEULL, 2));
}

}  // namespace rng
}  // namespace stochbond

#endif
