#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fbas {

/// splitmix64 finalizer; good avalanche, used as the hash primitive everywhere.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    // asymmetric in (seed, value) so key paths are order-sensitive
    return mix64(seed ^ (mix64(value) + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Fold a key path into one stream seed. All randomness in the project is
/// derived through this: stream_seed(master, component_tag, task_key...).
constexpr std::uint64_t stream_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) {
    for (std::uint64_t k : keys) seed = hash_combine(seed, k);
    return seed;
}

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// bit-reproducible across platforms and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9e3779b97f4a7c15ull;
            w = mix64(s);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), rejection sampled so the draw is unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= bound);
        return x % n;
    }

    /// Standard normal via the polar method (second deviate cached).
    double normal();

    Eigen::VectorXd normal_vector(int d);
    Eigen::VectorXd uniform_vector(int d, double lo, double hi);

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

/// Inverse standard normal CDF (Wichura's PPND16), |error| < 1e-15 for
/// p in (0, 1). Used to map low-discrepancy points to quasi-Gaussian draws.
double inverse_normal_cdf(double p);

/// Low-discrepancy point generators producing points in (0, 1)^d.
/// Sobol direction numbers cover the first 6 coordinates; higher coordinates
/// fall back to Halton radical inverses with prime bases. Both sequences are
/// randomized (digital shift / start offset) from the provided rng so that
/// independent seeds give independent streams.
class SobolSequence {
  public:
    SobolSequence(int dim, Rng& rng);
    Eigen::VectorXd next();

  private:
    int dim_;
    std::uint64_t index_ = 0;
    std::vector<std::array<std::uint32_t, 32>> direction_;  // per sobol dim
    std::vector<std::uint32_t> x_;                           // gray-code state
    std::vector<std::uint32_t> shift_;                       // digital shift
    std::vector<int> halton_base_;                           // overflow dims
    std::uint64_t halton_index_ = 0;
};

class HaltonSequence {
  public:
    HaltonSequence(int dim, Rng& rng);
    Eigen::VectorXd next();

  private:
    std::vector<int> base_;
    std::uint64_t index_ = 0;
};

double radical_inverse(std::uint64_t index, int base);

}  // namespace fbas
