#pragma once

#include <cstdint>
#include <random>

#include "nafhn/fourier.hpp"
#include "nafhn/problem.hpp"

namespace nafhn::testing {

// Seeded random inputs for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    cplx complex(double scale) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

    // Real-signal sequence with |c_k| <= scale * decay^|k|.
    FourierCoefficients sequence(int K, double scale = 1.0, double decay = 0.6) {
        FourierCoefficients c(K);
        double s = scale;
        c.set(0, uniform(-scale, scale));
        for (int k = 1; k <= K; ++k) {
            s *= decay;
            c.set(k, complex(s));
        }
        return c;
    }

    BranchPoint point(int K, double scale = 0.5) {
        BranchPoint x;
        x.omega = uniform(0.5, 1.5);
        x.delta = uniform(0.0, 1.0);
        for (auto &b : x.c) b = sequence(K, scale);
        return x;
    }

    std::mt19937_64 &engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace nafhn::testing
