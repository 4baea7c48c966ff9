#pragma once
// Deterministic random streams. Distributions are implemented on top of the
// raw mt19937_64 output so draws reproduce bit-for-bit across standard
// library implementations, not just across runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedfair {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed plus a tag sequence,
// e.g. substream(seed, stream::batches, round, client_id).
inline uint64_t substream(uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
uint64_t substream(uint64_t seed, uint64_t tag, Rest... rest) {
    return substream(splitmix64(seed ^ splitmix64(tag)), rest...);
}

namespace stream {
// Purpose tags keep unrelated draws on disjoint streams, so adding or
// removing draws in one place never desynchronises another.
inline constexpr uint64_t init = 0x11;
inline constexpr uint64_t sampling = 0x22;
inline constexpr uint64_t batches = 0x33;
inline constexpr uint64_t fisher = 0x44;
inline constexpr uint64_t adapt = 0x55;
inline constexpr uint64_t local_only = 0x66;
inline constexpr uint64_t synth = 0x77;
inline constexpr uint64_t partition = 0x88;
inline constexpr uint64_t split = 0x99;
inline constexpr uint64_t eval_subset = 0xaa;
}  // namespace stream

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1); safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return r % n;
    }

    // Standard normal, Box-Muller. No cached spare: every draw consumes
    // exactly two engine outputs, which keeps streams easy to reason about.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Marsaglia-Tsang gamma; the shape < 1 case is boosted through shape + 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("Rng::gamma: shape must be positive");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            return g * std::pow(uniform_open(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet over k categories.
    std::vector<double> dirichlet(double alpha, int k) {
        if (k < 1) throw std::invalid_argument("Rng::dirichlet: k must be positive");
        std::vector<double> out(static_cast<size_t>(k));
        double sum = 0.0;
        for (auto& g : out) {
            g = gamma(alpha);
            sum += g;
        }
        if (sum <= 0.0) {
            // all draws underflowed; fall back to the uniform vector
            std::fill(out.begin(), out.end(), 1.0 / k);
            return out;
        }
        for (auto& g : out) g /= sum;
        return out;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), returned ascending.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (n < 0 || k < 0 || k > n)
            throw std::invalid_argument("Rng::sample_without_replacement: k out of range");
        std::vector<int> pool(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            const size_t j =
                static_cast<size_t>(i) + static_cast<size_t>(below(static_cast<uint64_t>(n - i)));
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 eng_;
};

}  // namespace fedfair
