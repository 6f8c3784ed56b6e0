#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace afx {

// Deterministic RNG. Distribution code is hand-rolled on top of mt19937_64 so
// streams do not depend on the standard library's distribution internals.
struct Rng {
    std::mt19937_64 g;

    explicit Rng(uint64_t seed = 0) : g(seed) {}

    uint64_t next() { return g(); }

    // Uniform in [0,1).
    double u01() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(u01()) * (hi - lo);
    }

    // Uniform integer in [0, n).
    size_t index(size_t n) { return static_cast<size_t>(u01() * static_cast<double>(n)); }

    bool bernoulli(double p_true) { return u01() < p_true; }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[index(i)]);
    }
};

}  // namespace afx
