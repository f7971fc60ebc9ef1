#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace layermig {

// Mixes a seed with a stream tag so independent subsystems (arrivals,
// mobility, policy sampling, ...) draw from uncorrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distributions below are implemented here
// rather than taken from <random> so results do not depend on the standard
// library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

  bool bernoulli(double p) { return uniform() < p; }

  double normal();

  // Knuth's product-of-uniforms method; adequate for the small means used by
  // the arrival process.
  int poisson(double mean);

  // Index drawn proportionally to non-negative weights (at least one > 0).
  std::size_t weighted_index(std::span<const double> weights);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace layermig
