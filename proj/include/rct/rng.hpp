#pragma once

#include <cstdint>
#include <random>

namespace rct {

// Reproducible random stream. All distribution transforms are implemented
// here on top of the (standard-specified) mt19937_64 output sequence, so
// equal seeds give bit-identical draws regardless of the standard library's
// own distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Independent substream for replicate `index` of a run seeded with
    // `master`. Keying by index (not by draw order) is what makes serial
    // and parallel execution agree.
    static Rng substream(uint64_t master, uint64_t index);

    uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller without caching the spare deviate; two uniforms per draw.
    double normal(double mean_value = 0.0, double sd = 1.0);

    // Inversion by sequential search; intended for small means (< ~60).
    int poisson(double mean_value);

    // Uniform integer in [0, n).
    size_t index(size_t n);

  private:
    std::mt19937_64 gen_;
};

uint64_t splitmix64(uint64_t x);

}  // namespace rct
