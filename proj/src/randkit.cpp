#include "corrba/randkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace corrba {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::derive(std::initializer_list<std::uint64_t> keys) const {
  std::uint64_t h = mix64(seed_ ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return Rng(h);
}

double Rng::uniform() {
  // 53 random bits centred in their cell, so neither 0 nor 1 is reachable.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
}

double Rng::normal() { return normal_(engine_); }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(engine_);
}

double normal_cdf(double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("normal_cdf: non-finite argument");
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

namespace {

// Acklam's rational approximation for the lower half, relative error 1.15e-9.
double quantile_seed(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// p <= 0.5 only; the upper half is obtained by symmetry so that 1 - p stays exact.
double lower_quantile(double p) {
  double x = quantile_seed(p);
  // One Halley step against the erfc-based CDF.
  const double e = 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

void check_correlation(double rho, const char* what) {
  if (!(std::abs(rho) <= 1.0)) {
    throw std::domain_error(std::string(what) + ": correlation outside [-1, 1]");
  }
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  if (p > 0.5) return -lower_quantile(1.0 - p);
  return lower_quantile(p);
}

double corr_uniform_from_normal(double rho_n) {
  check_correlation(rho_n, "corr_uniform_from_normal");
  if (std::abs(rho_n) == 1.0) return rho_n;
  const double u = 6.0 / std::numbers::pi * std::asin(rho_n / 2.0);
  return std::clamp(u, -1.0, 1.0);
}

double corr_normal_from_uniform(double rho_u) {
  check_correlation(rho_u, "corr_normal_from_uniform");
  if (std::abs(rho_u) == 1.0) return rho_u;  // sin(pi/6) is not exact in binary
  const double n = 2.0 * std::sin(std::numbers::pi * rho_u / 6.0);
  return std::clamp(n, -1.0, 1.0);
}

}  // namespace corrba
