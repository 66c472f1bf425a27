#include "rct/rng.hpp"

#include <cmath>

namespace rct {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::substream(uint64_t master, uint64_t index) {
    // Two rounds of mixing decorrelate adjacent indices.
    return Rng(splitmix64(splitmix64(master) ^ splitmix64(index + 1)));
}

double Rng::normal(double mean_value, double sd) {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean_value + sd * z;
}

int Rng::poisson(double mean_value) {
    if (mean_value <= 0.0) return 0;
    const double limit = std::exp(-mean_value);
    double prod = uniform01();
    int k = 0;
    while (prod > limit) {
        prod *= uniform01();
        ++k;
    }
    return k;
}

size_t Rng::index(size_t n) {
    // Rejection-free scaling; bias is < 2^-53 per draw, irrelevant at our n.
    return static_cast<size_t>(uniform01() * static_cast<double>(n));
}

}  // namespace rct
