#include "corrba/bagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace corrba {

std::string_view to_string(CorrelationMode mode) {
  switch (mode) {
    case CorrelationMode::NoCorrelation: return "none";
    case CorrelationMode::Simple: return "simple";
    case CorrelationMode::Rescaled: return "rescaled";
  }
  return "?";
}

CorrelationMode parse_correlation_mode(std::string_view name) {
  if (name == "none") return CorrelationMode::NoCorrelation;
  if (name == "simple") return CorrelationMode::Simple;
  if (name == "rescaled") return CorrelationMode::Rescaled;
  throw std::invalid_argument("unknown correlation mode '" + std::string(name) + "'");
}

// --- AttachmentSampler -------------------------------------------------------

AttachmentSampler::AttachmentSampler(std::span<const std::uint64_t> weights) {
  weights_.reserve(weights.size());
  tree_.reserve(weights.size() + 1);
  for (std::uint64_t w : weights) push_back(w);
}

void AttachmentSampler::push_back(std::uint64_t weight) {
  if (tree_.empty()) tree_.push_back(0);
  const std::size_t i = weights_.size() + 1;  // 1-based slot
  // tree_[i] covers (i - lowbit(i), i]; everything but the new slot is known.
  std::uint64_t covered = weight;
  const std::size_t low = i - (i & (~i + 1));
  for (std::size_t j = i - 1; j > low; j -= j & (~j + 1)) covered += tree_[j];
  tree_.push_back(covered);
  weights_.push_back(weight);
  total_ += weight;
  if (weight > 0) ++positive_;
}

void AttachmentSampler::tree_add(std::size_t index, std::int64_t delta) {
  for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) {
    tree_[i] = static_cast<std::uint64_t>(static_cast<std::int64_t>(tree_[i]) + delta);
  }
}

void AttachmentSampler::add(NodeId item, std::int64_t delta) {
  const std::uint64_t old = weights_.at(item);
  if (delta < 0 && static_cast<std::uint64_t>(-delta) > old) {
    throw std::invalid_argument("AttachmentSampler::add: weight would become negative");
  }
  const std::uint64_t updated = static_cast<std::uint64_t>(static_cast<std::int64_t>(old) + delta);
  weights_[item] = updated;
  tree_add(item, delta);
  total_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(total_) + delta);
  if (old == 0 && updated > 0) ++positive_;
  if (old > 0 && updated == 0) --positive_;
}

// Smallest index whose inclusive prefix sum exceeds target.
std::size_t AttachmentSampler::find(std::uint64_t target) const {
  std::size_t pos = 0;
  std::size_t step = std::size_t{1} << (std::numeric_limits<std::size_t>::digits - 1);
  while (step > tree_.size()) step >>= 1;
  for (; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= target) {
      pos = next;
      target -= tree_[next];
    }
  }
  return pos;  // 1-based slot pos + 1, i.e. 0-based index pos
}

std::vector<NodeId> AttachmentSampler::draw_without_replacement(std::size_t count, Rng& rng) {
  std::vector<NodeId> drawn;
  drawn.reserve(count);

  if (total_ == 0) {
    if (count > weights_.size()) {
      throw GenerationError("cannot draw " + std::to_string(count) + " neighbours from " +
                            std::to_string(weights_.size()) + " nodes");
    }
    // Partial Fisher-Yates over the index range.
    std::vector<NodeId> pool(weights_.size());
    std::iota(pool.begin(), pool.end(), NodeId{0});
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      drawn.push_back(pool[i]);
    }
    return drawn;
  }

  if (count > positive_) {
    throw GenerationError("cannot draw " + std::to_string(count) + " neighbours from " +
                          std::to_string(positive_) + " nodes of positive degree");
  }
  std::uint64_t remaining = total_;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = find(rng.below(remaining));
    drawn.push_back(static_cast<NodeId>(idx));
    tree_add(idx, -static_cast<std::int64_t>(weights_[idx]));
    remaining -= weights_[idx];
  }
  for (NodeId v : drawn) tree_add(v, static_cast<std::int64_t>(weights_[v]));
  return drawn;
}

// --- Generator building blocks -----------------------------------------------

GeneratedGraph init_seed_graph(std::size_t m, std::size_t d, Rng& rng) {
  if (m == 0) throw std::invalid_argument("init_seed_graph: m must be positive");
  if (d == 0) throw std::invalid_argument("init_seed_graph: d must be positive");
  GeneratedGraph seed{Graph(m), FeatureMatrix(d)};
  for (NodeId u = 0; u < m; ++u) {
    for (NodeId v = u + 1; v < m; ++v) seed.graph.add_edge(u, v);
  }
  std::vector<double> row(d);
  for (std::size_t i = 0; i < m; ++i) {
    for (double& x : row) x = rng.uniform();
    seed.features.append_row(row);
  }
  return seed;
}

std::vector<NodeId> select_neighbors(const Graph& g, std::size_t m, Rng& rng) {
  std::vector<std::uint64_t> degrees(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) degrees[v] = g.degree(v);
  AttachmentSampler sampler(degrees);
  return sampler.draw_without_replacement(m, rng);
}

std::vector<double> compute_correlations(std::span<const std::uint64_t> neighbor_weights,
                                         std::uint64_t total_weight, CorrelationMode mode,
                                         bool renormalize) {
  std::vector<double> rho(neighbor_weights.size(), 0.0);
  if (mode == CorrelationMode::NoCorrelation) return rho;
  if (total_weight == 0) throw GenerationError("compute_correlations: zero degree sum");

  if (mode == CorrelationMode::Rescaled && !renormalize) {
    const std::uint64_t chosen =
        std::accumulate(neighbor_weights.begin(), neighbor_weights.end(), std::uint64_t{0});
    if (chosen == 0) throw GenerationError("compute_correlations: chosen neighbours have zero degree");
    for (std::size_t i = 0; i < rho.size(); ++i) {
      rho[i] = static_cast<double>(neighbor_weights[i]) / static_cast<double>(chosen);
    }
    return rho;
  }

  std::uint64_t remaining = total_weight;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (remaining == 0) throw GenerationError("compute_correlations: weight exhausted");
    rho[i] = static_cast<double>(neighbor_weights[i]) / static_cast<double>(remaining);
    if (renormalize) remaining -= std::min(remaining, neighbor_weights[i]);
  }
  if (mode == CorrelationMode::Rescaled) {
    const double sum = std::accumulate(rho.begin(), rho.end(), 0.0);
    for (double& x : rho) x /= sum;
  }
  return rho;
}

std::vector<double> compute_correlations_from_degrees(std::span<const std::uint64_t> degrees,
                                                      std::span<const NodeId> neighbors,
                                                      CorrelationMode mode, bool renormalize) {
  std::vector<std::uint64_t> weights;
  weights.reserve(neighbors.size());
  for (NodeId v : neighbors) weights.push_back(degrees[v]);
  const std::uint64_t total = std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
  return compute_correlations(weights, total, mode, renormalize);
}

AttachmentDraw attach(const Graph& g, std::size_t m, CorrelationMode mode, Rng& rng, bool renormalize) {
  std::vector<std::uint64_t> degrees(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) degrees[v] = g.degree(v);
  AttachmentSampler sampler(degrees);
  const bool bootstrap = sampler.total() == 0;
  AttachmentDraw draw;
  draw.neighbors = sampler.draw_without_replacement(m, rng);
  std::vector<std::uint64_t> weights;
  for (NodeId v : draw.neighbors) weights.push_back(bootstrap ? 1 : degrees[v]);
  draw.correlations =
      compute_correlations(weights, bootstrap ? g.node_count() : sampler.total(), mode, renormalize);
  return draw;
}

double covariance_determinant(std::span<const double> rho) {
  // Expanding the last row of Sigma_{j+1} along the column of rho_j leaves
  // Sigma_j minus the rank-one term rho_j^2.
  double det = 1.0;
  for (double r : rho) det -= r * r;
  return det;
}

std::vector<double> sample_normal_conditional(std::span<const std::span<const double>> neighbor_rows,
                                              std::span<const double> rho_normal, std::size_t dim,
                                              Rng& rng) {
  if (neighbor_rows.size() != rho_normal.size()) {
    throw std::invalid_argument("sample_normal_conditional: one correlation per neighbour required");
  }
  double rr = 0.0;
  for (double r : rho_normal) rr += r * r;
  if (1.0 - rr < -1e-9) {
    throw CovarianceError("conditional covariance not positive definite: 1 - rho^T rho = " +
                          std::to_string(1.0 - rr));
  }
  double shrink = 1.0;
  if (rr >= 1.0) {
    shrink = 1.0 / std::sqrt(rr / (1.0 - kVarianceFloor));
    rr = 1.0 - kVarianceFloor;
  }
  const double sd = std::sqrt(std::max(kVarianceFloor, 1.0 - rr));

  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < neighbor_rows.size(); ++i) {
    const auto row = neighbor_rows[i];
    if (row.size() != dim) throw std::invalid_argument("sample_normal_conditional: row width mismatch");
    const double r = rho_normal[i] * shrink;
    if (r == 0.0) continue;
    for (std::size_t j = 0; j < dim; ++j) out[j] += r * row[j];
  }
  for (double& x : out) x += sd * rng.normal();
  return out;
}

namespace {

// Stored values live in the closed interval; keep Phi^-1 finite at the ends.
double to_normal(double u) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return normal_quantile(std::clamp(u, lo, hi));
}

}  // namespace

std::vector<double> sample_feature_conditional(std::span<const std::span<const double>> neighbor_rows,
                                               std::span<const double> rho_uniform, Rng& rng) {
  if (neighbor_rows.empty()) throw std::invalid_argument("sample_feature_conditional: no neighbours");
  const std::size_t dim = neighbor_rows.front().size();
  std::vector<std::vector<double>> normal_rows;
  normal_rows.reserve(neighbor_rows.size());
  for (const auto row : neighbor_rows) {
    auto& z = normal_rows.emplace_back(row.size());
    std::transform(row.begin(), row.end(), z.begin(), to_normal);
  }
  std::vector<std::span<const double>> views(normal_rows.begin(), normal_rows.end());
  std::vector<double> rho_normal(rho_uniform.size());
  std::transform(rho_uniform.begin(), rho_uniform.end(), rho_normal.begin(), corr_normal_from_uniform);

  auto x = sample_normal_conditional(views, rho_normal, dim, rng);
  for (double& v : x) v = normal_cdf(v);
  return x;
}

// --- generate ----------------------------------------------------------------

namespace {
constexpr std::uint64_t kStructureStream = 1;
constexpr std::uint64_t kFeatureStream = 2;
}  // namespace

GeneratedGraph generate(std::size_t n, std::size_t m, std::size_t d, CorrelationMode mode, Rng& rng,
                        const GenerateOptions& options) {
  if (m == 0 || d == 0) throw std::invalid_argument("generate: m and d must be positive");
  if (n < m) throw std::invalid_argument("generate: n must be at least m");

  Rng structure_rng = rng.derive({kStructureStream});
  Rng feature_rng = rng.derive({kFeatureStream});

  GeneratedGraph out = init_seed_graph(m, d, feature_rng);

  // Normal-space mirror of the stored features; filled once per node rather
  // than once per (node, neighbour) read. Reserved up front so row views stay
  // valid.
  std::vector<double> normal;
  normal.reserve(n * d);
  for (double u : out.features.values()) normal.push_back(to_normal(u));

  std::vector<std::uint64_t> seed_degrees(m, m - 1);
  AttachmentSampler sampler(seed_degrees);

  if (options.trace != nullptr) {
    options.trace->n = n;
    options.trace->m = m;
    options.trace->simple_rho.clear();
    options.trace->simple_rho.reserve(n - m);
  }

  std::vector<std::uint64_t> weights(m);
  std::vector<std::span<const double>> rows(m);
  std::vector<double> rho_normal(m);
  std::vector<double> uniform_row(d);

  for (std::size_t t = m; t < n; ++t) {
    const bool bootstrap = sampler.total() == 0;
    const std::uint64_t total = bootstrap ? t : sampler.total();
    const auto neighbors = sampler.draw_without_replacement(m, structure_rng);
    for (std::size_t i = 0; i < m; ++i) weights[i] = bootstrap ? 1 : sampler.weight(neighbors[i]);

    if (options.trace != nullptr) {
      options.trace->simple_rho.push_back(
          compute_correlations(weights, total, CorrelationMode::Simple, options.renormalize));
    }
    const auto rho = compute_correlations(weights, total, mode, options.renormalize);
    for (std::size_t i = 0; i < m; ++i) {
      rho_normal[i] = corr_normal_from_uniform(rho[i]);
      rows[i] = std::span<const double>(normal).subspan(neighbors[i] * d, d);
    }

    const auto z = sample_normal_conditional(rows, rho_normal, d, feature_rng);
    for (std::size_t j = 0; j < d; ++j) uniform_row[j] = normal_cdf(z[j]);

    const NodeId v = out.graph.add_node();
    for (NodeId u : neighbors) out.graph.add_edge(v, u);
    out.features.append_row(uniform_row);
    for (double u : uniform_row) normal.push_back(to_normal(u));

    sampler.push_back(m);
    for (NodeId u : neighbors) sampler.add(u, 1);
  }
  return out;
}

std::size_t dense_attachment(std::size_t n, std::size_t divisor) {
  if (divisor == 0) throw std::invalid_argument("dense_attachment: divisor must be positive");
  return std::max<std::size_t>(1, n / divisor);
}

}  // namespace corrba
