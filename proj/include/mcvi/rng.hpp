#pragma once

#include <cstdint>
#include <random>

#include "mcvi/math.hpp"

namespace mcvi {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seeded stream with derivable child streams. Equal seeds give bitwise
// identical draw sequences; uniforms are built from raw bits so the stream is
// implementation-independent.
class RngHandle {
  public:
    explicit RngHandle(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t raw() { return eng_(); }

    // uniform on (0,1), 53-bit resolution, endpoints excluded
    double uniform01() {
        std::uint64_t bits;
        do {
            bits = eng_() >> 11;
        } while (bits == 0);
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via inverse CDF (deterministic, one draw per variate)
    double normal01() { return inv_normal_cdf(uniform01()); }

    RngHandle child(std::uint64_t stream) const {
        return RngHandle(splitmix64(seed_ ^ (0xA0761D6478BD642FULL * (stream + 1))));
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace mcvi
