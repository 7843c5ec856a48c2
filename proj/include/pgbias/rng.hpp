#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace pgbias {

/// Seeded random stream. Each sampler owns one; streams are derived from a
/// (seed, stream id) pair so independent consumers never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n);
  /// Draws an index from an (unnormalized, nonnegative) weight vector.
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace pgbias
