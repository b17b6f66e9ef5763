#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "corrba/bagen.hpp"

namespace corrba {

// Late-stage asymptotics of the Simple-mode correlations in BA(n, m), where
// C_i = k_i / r is the correlation towards the i-th chosen neighbour and
// Q = sum_i C_i.

/// E(C_1) ~ (ln n - ln m) / (2n). Throws std::domain_error unless n > m >= 1.
double expected_c1(std::size_t n, std::size_t m);

/// E(Q) ~ (2 + ln u) / (2u) with u = n / m. Throws std::domain_error unless
/// n > m >= 1.
double expected_q(std::size_t n, std::size_t m);

/// theta(n) = ln(1 - 1/(2n)). Throws std::domain_error for n = 0.
double theta_schedule(std::size_t n);

struct WalleniusGroup {
  double weight = 1.0;     // omega_k > 0
  std::uint64_t size = 0;  // n_k > 0
};

struct WalleniusSpec {
  std::vector<WalleniusGroup> groups;
  std::uint64_t draws = 0;  // m
};

struct WalleniusMeans {
  double theta = 0.0;         // mu_k = n_k (1 - exp(omega_k * theta))
  std::vector<double> means;  // mu_k, one per group
};

/// Mean approximation for the multivariate Wallenius noncentral
/// hypergeometric distribution: finds t = e^theta in (0, 1) with
/// sum_k n_k (1 - t^omega_k) = m by bisection.
///
/// Throws std::invalid_argument for empty groups or non-positive weights,
/// std::domain_error when m = 0 or m >= sum_k n_k (no root in (0, 1)).
WalleniusMeans wallenius_mean_approx(const WalleniusSpec& spec);

/// Number of growth steps counted as late-stage: the final
/// ceil(late_frac * steps), at least one.
std::size_t late_stage_steps(const GrowthTrace& trace, double late_frac);

/// Mean of C_1 over the late-stage steps of one or more runs.
double empirical_c1(const GrowthTrace& trace, double late_frac);
double empirical_c1(const std::vector<GrowthTrace>& traces, double late_frac);

/// Mean of Q over the late-stage steps of one or more runs.
double empirical_q(const GrowthTrace& trace, double late_frac);
double empirical_q(const std::vector<GrowthTrace>& traces, double late_frac);

/// Mean of C_i for each draw index i = 1..m.
std::vector<double> empirical_ci(const std::vector<GrowthTrace>& traces, double late_frac);

}  // namespace corrba
