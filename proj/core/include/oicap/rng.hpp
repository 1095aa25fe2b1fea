#ifndef OICAP_RNG_HPP
#define OICAP_RNG_HPP

#include <cmath>
#include <cstdint>

namespace oicap {

/// Reproducible random stream with cheap substream derivation, so ensemble
/// samples can be generated in parallel and still replay bit-identically.
///
/// The generator is splitmix64; variates are derived from the raw 64-bit
/// output with fixed arithmetic (no implementation-defined distributions).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed), base_(seed) {}

    /// Independent stream for sample `index`, derived from the base seed only.
    Rng substream(std::uint64_t index) const {
        return Rng(mix(base_ ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the polar (Marsaglia) method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, q;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            q = u * u + v * v;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Laplace(mu, b) by inverse CDF.
    double laplace(double mu, double b) {
        const double u = uniform() - 0.5;
        return mu - b * ((u < 0.0) ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::fabs(u));
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
    std::uint64_t base_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace oicap

#endif
