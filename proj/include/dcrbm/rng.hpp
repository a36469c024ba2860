// Seeded random streams with explicitly coded samplers, so that every draw
// is reproducible across compilers and standard libraries.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace dcrbm {

// splitmix64; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ b);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b) ^ c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Poisson draw. Splits large rates into chunks so the Knuth product method
  // never underflows; the sum of independent Poissons is Poisson.
  long poisson(double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) {
      throw std::invalid_argument("poisson: rate must be finite and >= 0");
    }
    long total = 0;
    constexpr double kChunk = 16.0;
    while (rate > kChunk) {
      total += poisson_knuth(kChunk);
      rate -= kChunk;
    }
    return total + poisson_knuth(rate);
  }

  // Index draw from a probability vector (assumed to sum to ~1).
  Eigen::Index categorical(const Eigen::VectorXd& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;  // rounding leftovers land on the last class
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  long poisson_knuth(double rate) {
    const double limit = std::exp(-rate);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::mt19937_64 gen_;
};

}  // namespace dcrbm
