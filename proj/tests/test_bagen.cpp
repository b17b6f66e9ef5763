#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "corrba/bagen.hpp"
#include "corrba/graphcore.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace corrba;

namespace {

std::vector<std::uint64_t> degrees_of(const Graph& g) {
  std::vector<std::uint64_t> d(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) d[v] = g.degree(v);
  return d;
}

// Exact probability that `target` is among `draws` sequential weighted draws
// without replacement, by walking the whole draw tree.
double inclusion_probability(std::vector<double> weights, std::size_t draws, std::size_t target) {
  if (draws == 0) return 0.0;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double p = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double pi = weights[i] / total;
    if (i == target) {
      p += pi;
    } else {
      auto rest = weights;
      rest[i] = 0.0;
      p += pi * inclusion_probability(rest, draws - 1, target);
    }
  }
  return p;
}

// Linear cumulative scan consuming the same random numbers as the sampler.
std::vector<NodeId> linear_scan_draws(std::vector<std::uint64_t> weights, std::size_t count, Rng& rng) {
  std::vector<NodeId> out;
  std::uint64_t remaining = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t target = rng.below(remaining);
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (acc > target) {
        out.push_back(static_cast<NodeId>(i));
        remaining -= weights[i];
        weights[i] = 0;
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("init_seed_graph") {
  Rng rng(1);
  const auto one = init_seed_graph(1, 3, rng);
  CHECK(one.graph.node_count() == 1);
  CHECK(one.graph.edge_count() == 0);

  const auto five = init_seed_graph(5, 32, rng);
  CHECK(five.graph.edge_count() == 10);
  for (NodeId v = 0; v < 5; ++v) CHECK(five.graph.degree(v) == 4);
  CHECK(five.features.rows() == 5);
  double mean = 0.0;
  for (double x : five.features.values()) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    mean += x;
  }
  mean /= 160.0;
  CHECK(std::abs(mean - 0.5) < 0.15);

  CHECK_THROWS_AS(init_seed_graph(0, 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(init_seed_graph(3, 0, rng), std::invalid_argument);
}

TEST_CASE("select_neighbors on K2 and a star") {
  constexpr int trials = 100000;
  Rng rng(2);

  const Graph k2 = testing::complete_graph(2);
  int zeros = 0;
  for (int i = 0; i < trials; ++i) zeros += select_neighbors(k2, 1, rng).front() == 0;
  const double se_half = std::sqrt(0.25 / trials);
  CHECK(std::abs(zeros / double(trials) - 0.5) < 3 * se_half);

  const Graph star = testing::star_graph(4);
  int centre = 0;
  for (int i = 0; i < trials; ++i) centre += select_neighbors(star, 1, rng).front() == 0;
  CHECK(std::abs(centre / double(trials) - 0.5) < 3 * se_half);

  const double exact = inclusion_probability({4, 1, 1, 1, 1}, 2, 0);
  CHECK(exact == doctest::Approx(0.5 + 0.5 * 4.0 / 7.0));
  int included = 0;
  for (int i = 0; i < trials; ++i) {
    const auto nb = select_neighbors(star, 2, rng);
    REQUIRE(nb.size() == 2);
    REQUIRE(nb[0] != nb[1]);
    included += (nb[0] == 0 || nb[1] == 0);
  }
  const double se = std::sqrt(exact * (1 - exact) / trials);
  CHECK(std::abs(included / double(trials) - exact) < 3 * se);
}

TEST_CASE("select_neighbors errors when too few candidates") {
  Rng rng(3);
  CHECK_THROWS_AS(select_neighbors(testing::complete_graph(3), 4, rng), GenerationError);
  Graph g(4);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(select_neighbors(g, 3, rng), GenerationError);  // only two nodes have degree
  // All-zero degrees: uniform over every node.
  const auto nb = select_neighbors(Graph(3), 3, rng);
  CHECK(std::set<NodeId>(nb.begin(), nb.end()).size() == 3);
}

TEST_CASE("Fenwick sampler matches a linear cumulative scan draw for draw") {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::uint64_t> w(0, 40);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + gen() % 70;
    std::vector<std::uint64_t> weights(n);
    for (auto& x : weights) x = w(gen);
    weights[gen() % n] += 1;  // at least one positive weight
    const std::size_t positive = std::count_if(weights.begin(), weights.end(), [](auto x) { return x > 0; });
    const std::size_t count = 1 + gen() % positive;

    AttachmentSampler sampler(weights);
    Rng a(rep);
    Rng b(rep);
    CAPTURE(rep);
    CHECK(sampler.draw_without_replacement(count, a) == linear_scan_draws(weights, count, b));
    // The sampler is restored after drawing, and incremental updates agree
    // with a fresh build.
    const NodeId bump = static_cast<NodeId>(gen() % n);
    sampler.add(bump, 3);
    sampler.push_back(5);
    weights[bump] += 3;
    weights.push_back(5);
    CHECK(sampler.total() == std::accumulate(weights.begin(), weights.end(), std::uint64_t{0}));
    Rng c(rep + 1000);
    Rng d(rep + 1000);
    CHECK(sampler.draw_without_replacement(count, c) == linear_scan_draws(weights, count, d));
  }
}

TEST_CASE("compute_correlations") {
  const std::vector<std::uint64_t> star{4, 1, 1, 1, 1};
  const std::vector<NodeId> chosen{0, 3};

  const auto none = compute_correlations_from_degrees(star, chosen, CorrelationMode::NoCorrelation);
  CHECK(none == std::vector<double>{0.0, 0.0});

  const auto simple = compute_correlations_from_degrees(star, chosen, CorrelationMode::Simple);
  CHECK(simple == std::vector<double>{0.5, 0.125});

  const auto rescaled = compute_correlations_from_degrees(star, chosen, CorrelationMode::Rescaled);
  CHECK(rescaled[0] == doctest::Approx(0.8));
  CHECK(rescaled[1] == doctest::Approx(0.2));

  // Conditional probabilities: 4/8, then 1/(8-4).
  const auto renorm = compute_correlations_from_degrees(star, chosen, CorrelationMode::Simple, true);
  CHECK(renorm == std::vector<double>{0.5, 0.25});

  const std::vector<std::uint64_t> w{1, 2};
  CHECK_THROWS_AS(compute_correlations(w, 0, CorrelationMode::Simple), GenerationError);
  CHECK(compute_correlations(w, 0, CorrelationMode::NoCorrelation) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("covariance_determinant equals the full determinant and 1 - rho^T rho") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t m = 1 + gen() % 8;
    std::vector<double> rho(m);
    for (auto& r : rho) r = unit(gen);
    const double norm = std::sqrt(std::inner_product(rho.begin(), rho.end(), rho.begin(), 0.0));
    const double scale = std::uniform_real_distribution<double>(0.0, 0.999)(gen) / norm;
    for (auto& r : rho) r *= scale;

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(m + 1, m + 1);
    for (std::size_t i = 0; i < m; ++i) sigma(i, m) = sigma(m, i) = rho[i];
    const double rr = std::inner_product(rho.begin(), rho.end(), rho.begin(), 0.0);
    CHECK(std::abs(covariance_determinant(rho) - sigma.determinant()) < 1e-12);
    CHECK(std::abs(covariance_determinant(rho) - (1.0 - rr)) < 1e-12);
  }
}

TEST_CASE("sample_feature_conditional: independence case is uniform") {
  Rng rng(7);
  const std::vector<double> nb{0.3};
  const std::vector<std::span<const double>> rows{nb};
  const std::vector<double> rho{0.0};
  constexpr std::size_t n = 100000;
  std::vector<double> u(n);
  for (auto& x : u) x = sample_feature_conditional(rows, rho, rng).front();
  CHECK(testing::ks_uniform(u) < testing::ks_critical_01(n));
}

TEST_CASE("sample_feature_conditional: near-perfect correlation copies the neighbour") {
  Rng rng(8);
  const std::vector<double> rho{1.0 - 1e-12};
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> nb(4);
    for (auto& x : nb) x = rng.uniform();
    const std::vector<std::span<const double>> rows{nb};
    const auto out = sample_feature_conditional(rows, rho, rng);
    for (std::size_t j = 0; j < nb.size(); ++j) CHECK(std::abs(out[j] - nb[j]) < 1e-3);
  }
  // rho = 1 exactly (Rescaled with m = 1) takes the variance floor.
  const std::vector<double> nb{0.42};
  const std::vector<std::span<const double>> rows{nb};
  const auto out = sample_feature_conditional(rows, std::vector<double>{1.0}, rng);
  CHECK(std::abs(out[0] - 0.42) < 1e-5);
}

TEST_CASE("sample_feature_conditional: uniform-space correlation hits the target") {
  Rng rng(9);
  constexpr std::size_t n = 100000;
  std::vector<double> a(n);
  std::vector<double> b(n);
  const std::vector<double> rho{0.5};
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> nb{rng.uniform()};
    const std::vector<std::span<const double>> rows{nb};
    a[i] = nb[0];
    b[i] = sample_feature_conditional(rows, rho, rng).front();
  }
  CHECK(std::abs(testing::pearson(a, b) - 0.5) < 0.01);
}

TEST_CASE("sample_normal_conditional rejects an indefinite covariance") {
  Rng rng(10);
  const std::vector<double> r1{0.1};
  const std::vector<double> r2{0.2};
  const std::vector<std::span<const double>> rows{r1, r2};
  CHECK_THROWS_AS(sample_normal_conditional(rows, std::vector<double>{0.9, 0.9}, 1, rng), CovarianceError);
  CHECK_THROWS_AS(sample_feature_conditional(rows, std::vector<double>{0.9, 0.9}, rng), CovarianceError);
  CHECK_THROWS_AS(sample_normal_conditional(rows, std::vector<double>{0.5}, 1, rng), std::invalid_argument);
  // Just above one is shrunk rather than rejected.
  const double edge = std::sqrt(0.5 + 2e-10);
  CHECK_NOTHROW(sample_normal_conditional(rows, std::vector<double>{edge, edge}, 1, rng));
}

TEST_CASE("generate: edge counts and insertion structure") {
  Rng rng(12);
  const auto k5 = generate(5, 5, 3, CorrelationMode::Simple, rng);
  CHECK(k5.graph.edge_count() == 10);

  const auto small = generate(10, 3, 3, CorrelationMode::Simple, rng);
  CHECK(small.graph.edge_count() == 24);

  const auto big = generate(2000, 5, 8, CorrelationMode::Rescaled, rng);
  CHECK(big.graph.edge_count() == 9985);
  CHECK(2.0 * big.graph.edge_count() / 2000.0 == doctest::Approx(9.985));
  for (NodeId v = 5; v < 2000; ++v) {
    const auto nb = big.graph.neighbors(v);
    REQUIRE(std::count_if(nb.begin(), nb.end(), [v](NodeId u) { return u < v; }) == 5);
  }
  for (double x : big.features.values()) REQUIRE((x >= 0.0 && x <= 1.0));
  CHECK(big.features.rows() == 2000);

  const auto tree = generate(50, 1, 2, CorrelationMode::Rescaled, rng);
  CHECK(tree.graph.edge_count() == 49);

  CHECK_THROWS_AS(generate(3, 5, 2, CorrelationMode::Simple, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate(3, 0, 2, CorrelationMode::Simple, rng), std::invalid_argument);
}

TEST_CASE("generate is deterministic per stream and replicate streams differ") {
  const Rng base(99);
  auto run = [&](std::uint64_t replicate) {
    Rng rng = base.derive({replicate});
    return generate(300, 4, 3, CorrelationMode::Simple, rng);
  };
  const auto a = run(0);
  const auto b = run(0);
  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(std::equal(a.features.values().begin(), a.features.values().end(), b.features.values().begin()));

  const auto c = run(1);
  CHECK(c.graph.edges() != a.graph.edges());
  CHECK(c.graph.edge_count() == a.graph.edge_count());
}

TEST_CASE("Simple-mode correlations stay inside the unit simplex") {
  for (std::size_t m : {1, 2, 5, 20}) {
    Rng rng(m);
    GrowthTrace trace;
    GenerateOptions options;
    options.trace = &trace;
    (void)generate(400, m, 1, CorrelationMode::Simple, rng, options);
    REQUIRE(trace.simple_rho.size() == 400 - m);
    for (std::size_t s = 0; s < trace.simple_rho.size(); ++s) {
      const auto& rho = trace.simple_rho[s];
      const double sum = std::accumulate(rho.begin(), rho.end(), 0.0);
      const double rr = std::inner_product(rho.begin(), rho.end(), rho.begin(), 0.0);
      const std::size_t existing = m + s;
      CHECK(sum <= 1.0 + 1e-12);
      if (existing > m) CHECK(sum < 1.0);
      if (m > 1) CHECK(rr < 1.0);
    }
  }
}

TEST_CASE("Rescaled draws sum to one") {
  Rng rng(13);
  const auto g = generate(300, 6, 1, CorrelationMode::NoCorrelation, rng);
  for (int i = 0; i < 200; ++i) {
    const auto draw = attach(g.graph, 6, CorrelationMode::Rescaled, rng);
    REQUIRE(draw.neighbors.size() == 6);
    CHECK(std::set<NodeId>(draw.neighbors.begin(), draw.neighbors.end()).size() == 6);
    for (NodeId v : draw.neighbors) CHECK(v < g.graph.node_count());
    double sum = 0.0;
    for (double r : draw.correlations) {
      CHECK(r > 0.0);
      sum += r;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("degree distribution has a power-law tail") {
  // Pooled CCDF over 30 BA(2000, 5) graphs, regressed in log-log on k in [10, 100].
  std::map<std::size_t, std::size_t> counts;
  std::size_t total = 0;
  const Rng base(2024);
  for (std::uint64_t r = 0; r < 30; ++r) {
    Rng rng = base.derive({r});
    const auto g = generate(2000, 5, 1, CorrelationMode::NoCorrelation, rng);
    for (const auto& [k, c] : degree_histogram(g.graph).counts) counts[k] += c;
    total += 2000;
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 10; k <= 100; ++k) {
    std::size_t at_least = 0;
    for (auto it = counts.lower_bound(k); it != counts.end(); ++it) at_least += it->second;
    if (at_least == 0) continue;
    xs.push_back(std::log(static_cast<double>(k)));
    ys.push_back(std::log(static_cast<double>(at_least) / static_cast<double>(total)));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  MESSAGE("CCDF slope " << slope);
  CHECK(slope > -2.6);
  CHECK(slope < -1.4);
}

TEST_CASE("dense_attachment and mode names") {
  CHECK(dense_attachment(25, 5) == 5);
  CHECK(dense_attachment(2000, 5) == 400);
  CHECK(dense_attachment(4, 5) == 1);
  CHECK_THROWS_AS(dense_attachment(10, 0), std::invalid_argument);
  for (auto mode : {CorrelationMode::NoCorrelation, CorrelationMode::Simple, CorrelationMode::Rescaled}) {
    CHECK(parse_correlation_mode(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(parse_correlation_mode("partial"), std::invalid_argument);
}
