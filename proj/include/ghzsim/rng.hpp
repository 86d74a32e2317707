#pragma once

// Deterministic random streams. All sampling in the library goes through this
// wrapper rather than <random> distributions, so a given seed produces the
// same bytes on every run and platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace ghzsim {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller, spare cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // exact Poisson sample for any mean >= 0; large means are split into chunks
  // so the inversion product never underflows
  uint64_t poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) throw std::invalid_argument("poisson: bad mean");
    uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_inversion(30.0);
      mean -= 30.0;
    }
    return total + poisson_inversion(mean);
  }

  // index sampled according to non-negative weights (need not be normalized)
  size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw std::invalid_argument("categorical: no mass");
    double x = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return i;
    }
    return weights.size() - 1;
  }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) { return static_cast<uint64_t>(uniform() * static_cast<double>(n)); }

  // independent child stream, stable in (seed, id)
  static Rng fork(uint64_t seed, uint64_t stream_id) {
    return Rng(splitmix64(splitmix64(seed) ^ stream_id));
  }

 private:
  uint64_t poisson_inversion(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace ghzsim
