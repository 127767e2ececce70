#pragma once

#include <cstdint>
#include <random>

namespace boxlab {

// mt19937_64 core with our own variate transforms. The std:: distributions
// are implementation-defined, which would break the bit-identical-corpus
// guarantee across standard libraries; these transforms are fixed.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : engine_(seed) {}

    /// Child generator for stream `index`, independent of draws on `this`.
    static Prng stream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    double uniform_real(double lo, double hi);
    /// Uniform integer in [0, n), n >= 1, unbiased.
    std::uint64_t uniform_int(std::uint64_t n);
    bool bernoulli(double p);
    /// Standard normal via Box-Muller (one value per call, no cached spare).
    double normal();
    double normal(double mean, double stddev);
    /// Poisson count; exact Knuth method, split recursively for large means.
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive well-separated stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace boxlab
