#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace corrba {

/// Seeded random stream.
///
/// Each instance is single-owner. Work that must run in parallel gets its own
/// child stream from derive(), keyed by whatever identifies the work item
/// (replicate index, node index, ...). A child depends only on the parent's
/// seed and the keys, never on how many values the parent has produced, so
/// results do not depend on scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  /// Child stream keyed by (seed, keys...). Distinct key lists give distinct
  /// streams.
  [[nodiscard]] Rng derive(std::initializer_list<std::uint64_t> keys) const;

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal draw.
  double normal();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer. Used for seed derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Standard normal CDF. Throws std::invalid_argument for non-finite z.
double normal_cdf(double z);

/// Inverse of normal_cdf. Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

/// Pearson correlation of two U[0,1] variables whose Gaussian copula has
/// normal-space correlation rho_n: (6/pi) * asin(rho_n / 2).
double corr_uniform_from_normal(double rho_n);

/// Inverse of corr_uniform_from_normal: 2 * sin(pi * rho_u / 6).
double corr_normal_from_uniform(double rho_u);

}  // namespace corrba
