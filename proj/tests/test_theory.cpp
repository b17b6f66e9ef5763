#include <cmath>
#include <random>
#include <vector>

#include "corrba/bagen.hpp"
#include "corrba/theory.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace corrba;

namespace {

std::vector<GrowthTrace> traces_for(std::size_t n, std::size_t m, std::size_t replicates, std::uint64_t seed) {
  std::vector<GrowthTrace> traces(replicates);
  const Rng root(seed);
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng = root.derive({n, m, r});
    GenerateOptions options;
    options.trace = &traces[r];
    (void)generate(n, m, 1, CorrelationMode::NoCorrelation, rng, options);
  }
  return traces;
}

double excess(const WalleniusSpec& spec, double theta) {
  double s = 0.0;
  for (const auto& g : spec.groups) s += static_cast<double>(g.size) * (1.0 - std::exp(g.weight * theta));
  return s - static_cast<double>(spec.draws);
}

}  // namespace

TEST_CASE("closed-form late-stage estimates") {
  // Reference values evaluated with mpmath at 30 digits.
  CHECK(std::abs(expected_c1(2000, 5) - 0.00149786613677699550) < 1e-15);
  CHECK(std::abs(expected_c1(2000, 5) - 0.001498) < 1e-6);
  CHECK(std::abs(expected_q(2000, 5) - 0.00998933068388497748) < 1e-15);
  CHECK(std::abs(expected_q(2000, 5) - 0.009989) < 1e-6);
  CHECK(std::abs(expected_q(25, 5) - 0.360943791243410037) < 1e-15);
  CHECK(std::abs(expected_c1(2000, 5) / expected_q(2000, 5) - 0.149946596441480136) < 1e-12);

  CHECK(std::abs(theta_schedule(2000) - -2.5003125520931009e-4) < 1e-18);
  CHECK(theta_schedule(1) == doctest::Approx(std::log(0.5)));

  CHECK_THROWS_AS(expected_c1(5, 5), std::domain_error);
  CHECK_THROWS_AS(expected_q(10, 0), std::domain_error);
  CHECK_THROWS_AS(theta_schedule(0), std::domain_error);
}

TEST_CASE("expected_q depends on n / m only and expected_c1 decreases past n = 3m") {
  CHECK(expected_q(2000, 5) == expected_q(4000, 10));
  CHECK(expected_q(500, 100) == expected_q(25, 5));
  for (std::size_t m : {1, 5, 40, 400}) {
    double prev = expected_c1(3 * m, m);
    for (std::size_t n = 3 * m + 1; n < 3 * m + 2000; ++n) {
      const double cur = expected_c1(n, m);
      REQUIRE(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("Wallenius two-group example") {
  const WalleniusSpec spec{{{1.0, 5}, {2.0, 5}}, 3};
  const auto w = wallenius_mean_approx(spec);
  // t solves 5(1 - t) + 5(1 - t^2) = 3.
  CHECK(std::abs(std::exp(w.theta) - 0.784523257866512902) < 1e-12);
  CHECK(std::abs(w.means[0] - 1.07738371066743549) < 1e-12);
  CHECK(std::abs(w.means[1] - 1.92261628933256451) < 1e-12);
  CHECK(std::abs(w.means[0] + w.means[1] - 3.0) < 1e-12);
}

TEST_CASE("Wallenius bisection residual below 1e-10 on random specs") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> weight(0.1, 10.0);
  for (int rep = 0; rep < 1000; ++rep) {
    WalleniusSpec spec;
    const std::size_t groups = 1 + gen() % 6;
    std::uint64_t population = 0;
    for (std::size_t k = 0; k < groups; ++k) {
      spec.groups.push_back({weight(gen), 1 + gen() % 50});
      population += spec.groups.back().size;
    }
    if (population < 2) continue;
    spec.draws = 1 + gen() % (population - 1);
    const auto w = wallenius_mean_approx(spec);
    CAPTURE(rep);
    CHECK(w.theta < 0.0);
    CHECK(std::abs(excess(spec, w.theta)) < 1e-10);
    for (std::size_t k = 0; k < groups; ++k) {
      CHECK(w.means[k] > 0.0);
      CHECK(w.means[k] <= static_cast<double>(spec.groups[k].size));
    }
  }
}

TEST_CASE("Wallenius approximation within 15% of exact means for weight ratio <= 2") {
  // Every instance with two or three groups, population at most 8, weights
  // drawn from {1, 1.25, 1.5, 1.75, 2}.
  const std::vector<double> ws{1.0, 1.25, 1.5, 1.75, 2.0};
  double worst = 0.0;
  std::size_t instances = 0;
  auto check = [&](const std::vector<double>& weights, const std::vector<std::uint64_t>& sizes) {
    std::uint64_t population = 0;
    for (auto s : sizes) population += s;
    for (std::uint64_t m = 1; m < population; ++m) {
      WalleniusSpec spec;
      for (std::size_t k = 0; k < sizes.size(); ++k) spec.groups.push_back({weights[k], sizes[k]});
      spec.draws = m;
      const auto approx = wallenius_mean_approx(spec).means;
      const auto exact = testing::wallenius_exact_means(weights, sizes, m);
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        worst = std::max(worst, std::abs(approx[k] - exact[k]) / exact[k]);
      }
      ++instances;
    }
  };
  for (double w1 : ws) {
    for (double w2 : ws) {
      for (std::uint64_t a = 1; a <= 7; ++a) {
        for (std::uint64_t b = 1; a + b <= 8; ++b) {
          check({w1, w2}, {a, b});
          for (double w3 : ws) {
            for (std::uint64_t c = 1; a + b + c <= 8; ++c) check({w1, w2, w3}, {a, b, c});
          }
        }
      }
    }
  }
  MESSAGE(instances << " instances, worst relative error " << worst);
  CHECK(worst < 0.15);
}

TEST_CASE("Wallenius input validation") {
  CHECK_THROWS_AS(wallenius_mean_approx({{}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(wallenius_mean_approx({{{0.0, 3}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(wallenius_mean_approx({{{1.0, 0}}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(wallenius_mean_approx({{{1.0, 3}}, 0}), std::domain_error);
  CHECK_THROWS_AS(wallenius_mean_approx({{{1.0, 3}}, 3}), std::domain_error);
}

TEST_CASE("late-stage window") {
  GrowthTrace trace;
  trace.m = 1;
  trace.simple_rho = {{0.9}, {0.5}, {0.3}, {0.1}};
  CHECK(late_stage_steps(trace, 0.25) == 1);
  CHECK(late_stage_steps(trace, 0.3) == 2);
  CHECK(late_stage_steps(trace, 1.0) == 4);
  CHECK(empirical_c1(trace, 0.25) == doctest::Approx(0.1));
  CHECK(empirical_c1(trace, 0.5) == doctest::Approx(0.2));
  CHECK_THROWS_AS(late_stage_steps(trace, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(late_stage_steps(GrowthTrace{}, 0.5), std::invalid_argument);
}

TEST_CASE("empirical Q equals empirical C1 when m = 1") {
  const auto traces = traces_for(300, 1, 3, 5);
  CHECK(empirical_q(traces, 0.25) == empirical_c1(traces, 0.25));
  CHECK(empirical_q(traces[0], 0.25) == empirical_c1(traces[0], 0.25));
  const auto ci = empirical_ci(traces, 0.25);
  REQUIRE(ci.size() == 1);
  CHECK(ci[0] == doctest::Approx(empirical_c1(traces, 0.25)));
}

TEST_CASE("empirical late-stage correlations within a factor of two of the estimates") {
  const auto sparse = traces_for(2000, 5, 30, 20240601);
  const double c1_ratio = empirical_c1(sparse, 0.25) / expected_c1(2000, 5);
  const double q_ratio = empirical_q(sparse, 0.25) / expected_q(2000, 5);
  MESSAGE("BA(2000,5): C1 ratio " << c1_ratio << ", Q ratio " << q_ratio);
  CHECK(c1_ratio > 0.5);
  CHECK(c1_ratio < 2.0);
  CHECK(q_ratio > 0.5);
  CHECK(q_ratio < 2.0);

  const auto dense = traces_for(500, 100, 30, 20240601);
  const double dense_ratio = empirical_q(dense, 0.25) / expected_q(500, 100);
  MESSAGE("BA(500,100): Q ratio " << dense_ratio);
  CHECK(dense_ratio > 0.5);
  CHECK(dense_ratio < 2.0);

  // Per-draw means sum to Q.
  const auto ci = empirical_ci(sparse, 0.25);
  double sum = 0.0;
  for (double c : ci) sum += c;
  CHECK(sum == doctest::Approx(empirical_q(sparse, 0.25)));
}
