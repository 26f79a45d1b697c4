#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace arcnp {

/// Seeded random stream. All draws are derived from the raw 64-bit output
/// of mt19937_64 with hand-written transforms, so sequences are identical
/// across standard libraries (the std:: distributions are not).
///
/// A stream is single-owner; use fork() to derive an independent child.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lower, double upper);
  /// Uniform integer in the closed range [lower, upper].
  std::int64_t uniform_int(std::int64_t lower, std::int64_t upper);
  double normal();
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  /// Index drawn with probability proportional to `weights`.
  std::size_t categorical(const std::vector<double>& weights);
  /// Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  /// Child stream seeded by seed XOR splitmix64(index). Does not advance
  /// this stream.
  RngStream fork(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace arcnp
