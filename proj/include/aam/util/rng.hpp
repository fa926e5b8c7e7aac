#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace aam::util {

// Deterministic RNG with hand-rolled distributions so that streams do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<uint64_t>(n)); }

    // Box-Muller; draws two uniforms per call, no caching.
    double normal(double mean, double stddev) {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    // Knuth's product method; fine for the small rates used here.
    int poisson(double lambda) {
        double l = std::exp(-lambda), p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform01();
        } while (p > l);
        return k - 1;
    }

    // Sample an index from a discrete distribution (assumed to sum to ~1).
    int sample_discrete(const std::vector<double>& probs) {
        double u = uniform01(), acc = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    // Derive an independent stream, e.g. per episode.
    static Rng derive(uint64_t seed, uint64_t stream) {
        std::seed_seq seq{seed, stream, uint64_t{0x9e3779b97f4a7c15}};
        std::mt19937_64 eng(0);
        eng.seed(seq);
        Rng r;
        r.eng_ = eng;
        return r;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace aam::util
