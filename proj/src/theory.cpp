#include "corrba/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace corrba {

namespace {

void check_growth(std::size_t n, std::size_t m, const char* what) {
  if (m == 0 || n <= m) throw std::domain_error(std::string(what) + ": requires n > m >= 1");
}

}  // namespace

double expected_c1(std::size_t n, std::size_t m) {
  check_growth(n, m, "expected_c1");
  return (std::log(static_cast<double>(n)) - std::log(static_cast<double>(m))) / (2.0 * static_cast<double>(n));
}

double expected_q(std::size_t n, std::size_t m) {
  check_growth(n, m, "expected_q");
  const double u = static_cast<double>(n) / static_cast<double>(m);
  return (2.0 + std::log(u)) / (2.0 * u);
}

double theta_schedule(std::size_t n) {
  if (n == 0) throw std::domain_error("theta_schedule: n must be positive");
  return std::log1p(-1.0 / (2.0 * static_cast<double>(n)));
}

WalleniusMeans wallenius_mean_approx(const WalleniusSpec& spec) {
  if (spec.groups.empty()) throw std::invalid_argument("wallenius_mean_approx: no groups");
  std::uint64_t population = 0;
  for (const auto& g : spec.groups) {
    if (!(g.weight > 0.0) || !std::isfinite(g.weight)) {
      throw std::invalid_argument("wallenius_mean_approx: weights must be positive");
    }
    if (g.size == 0) throw std::invalid_argument("wallenius_mean_approx: group sizes must be positive");
    population += g.size;
  }
  if (spec.draws == 0 || spec.draws >= population) {
    throw std::domain_error("wallenius_mean_approx: need 0 < m < sum of group sizes");
  }

  const double m = static_cast<double>(spec.draws);
  // Strictly decreasing in t: N - m at t = 0, -m at t = 1.
  auto excess = [&](double t) {
    double s = 0.0;
    for (const auto& g : spec.groups) s += static_cast<double>(g.size) * (1.0 - std::pow(t, g.weight));
    return s - m;
  };

  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = excess(mid);
    if (f == 0.0) {
      lo = hi = mid;
      break;
    }
    (f > 0.0 ? lo : hi) = mid;
  }
  const double t = std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;

  WalleniusMeans out;
  out.theta = std::log(t);
  out.means.reserve(spec.groups.size());
  for (const auto& g : spec.groups) {
    out.means.push_back(static_cast<double>(g.size) * (1.0 - std::pow(t, g.weight)));
  }
  return out;
}

std::size_t late_stage_steps(const GrowthTrace& trace, double late_frac) {
  if (!(late_frac > 0.0 && late_frac <= 1.0)) throw std::invalid_argument("late_frac must lie in (0, 1]");
  const std::size_t steps = trace.simple_rho.size();
  if (steps == 0) throw std::invalid_argument("trace has no growth steps");
  const auto late = static_cast<std::size_t>(std::ceil(late_frac * static_cast<double>(steps)));
  return std::clamp<std::size_t>(late, 1, steps);
}

namespace {

template <typename Stat>
double late_mean(std::span<const GrowthTrace> traces, double late_frac, Stat stat) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& trace : traces) {
    const std::size_t late = late_stage_steps(trace, late_frac);
    const std::size_t start = trace.simple_rho.size() - late;
    for (std::size_t s = start; s < trace.simple_rho.size(); ++s) {
      sum += stat(trace.simple_rho[s]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no traces");
  return sum / static_cast<double>(count);
}

double first(const std::vector<double>& rho) { return rho.front(); }
double total(const std::vector<double>& rho) { return std::accumulate(rho.begin(), rho.end(), 0.0); }

}  // namespace

double empirical_c1(const GrowthTrace& trace, double late_frac) {
  return late_mean(std::span<const GrowthTrace>(&trace, 1), late_frac, first);
}

double empirical_c1(const std::vector<GrowthTrace>& traces, double late_frac) {
  return late_mean(traces, late_frac, first);
}

double empirical_q(const GrowthTrace& trace, double late_frac) {
  return late_mean(std::span<const GrowthTrace>(&trace, 1), late_frac, total);
}

double empirical_q(const std::vector<GrowthTrace>& traces, double late_frac) {
  return late_mean(traces, late_frac, total);
}

std::vector<double> empirical_ci(const std::vector<GrowthTrace>& traces, double late_frac) {
  if (traces.empty()) throw std::invalid_argument("no traces");
  const std::size_t m = traces.front().m;
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = late_mean(traces, late_frac, [i](const std::vector<double>& rho) { return rho.at(i); });
  }
  return out;
}

}  // namespace corrba
