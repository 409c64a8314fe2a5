#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lsc {

/// Gaussian samples via Box-Muller over explicit 53-bit uniforms from
/// mt19937_64. std::normal_distribution is implementation-defined, so the
/// sampling scheme is spelled out to keep seeded runs portable.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::mt19937_64& engine() { return gen_; }

  private:
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace lsc
