#include "boxlab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace boxlab {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Prng Prng::stream(std::uint64_t seed, std::uint64_t index) {
    return Prng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ull)));
}

double Prng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

std::uint64_t Prng::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be >= 1");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x < limit) return x % n;
    }
}

bool Prng::bernoulli(double p) {
    return uniform01() < p;
}

double Prng::normal() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform01();
    if (u < 1e-300) u = 1e-300;
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

double Prng::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::uint64_t Prng::poisson(double mean) {
    if (mean < 0) throw std::invalid_argument("poisson: mean must be >= 0");
    if (mean == 0) return 0;
    if (mean > 256.0) {
        // Poisson(a+b) = Poisson(a) + Poisson(b)
        const double half = mean * 0.5;
        return poisson(half) + poisson(mean - half);
    }
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform01();
    while (prod > limit) {
        ++k;
        prod *= uniform01();
    }
    return k;
}

} // namespace boxlab
