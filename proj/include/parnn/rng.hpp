#ifndef PARNN_RNG_HPP
#define PARNN_RNG_HPP

#include <cstdint>
#include <vector>

namespace parnn {

/// Deterministic pseudo-random generator: xoshiro256** seeded through
/// splitmix64. Pure integer state, so the raw stream is identical on
/// every platform for a given seed. Normal draws use the Marsaglia
/// polar method on top of the uniform stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, bound) by rejection sampling (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Standard normal scaled to (mean, stddev). stddev must be >= 0.
    double gaussian(double mean, double stddev);

    std::vector<double> gaussian_vector(std::size_t n, double mean, double stddev);

    /// Fisher-Yates shuffle driven by uniform_index, so the permutation
    /// is reproducible across platforms (std::shuffle is not).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace parnn

#endif
