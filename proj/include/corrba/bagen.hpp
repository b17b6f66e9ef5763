#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corrba/graphcore.hpp"
#include "corrba/randkit.hpp"

namespace corrba {

enum class CorrelationMode { NoCorrelation, Simple, Rescaled };

/// "none", "simple", "rescaled".
std::string_view to_string(CorrelationMode mode);
/// Inverse of to_string; throws std::invalid_argument on unknown names.
CorrelationMode parse_correlation_mode(std::string_view name);

/// Raised when a growth step cannot be completed. A sweep treats this as a
/// failed replicate and retries on a fresh stream.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The conditional covariance 1 - rho^T rho is negative.
class CovarianceError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

struct AttachmentDraw {
  std::vector<NodeId> neighbors;   // draw order
  std::vector<double> correlations;
};

/// Sequential weighted sampling without replacement over integer weights
/// (node degrees), backed by a Fenwick tree.
///
/// Each draw picks a remaining item with probability proportional to its
/// weight, then removes it, which renormalizes the rest. If every weight is
/// zero the draw is uniform over all items; that is how BA(n, 1) gets past
/// its edgeless seed.
class AttachmentSampler {
 public:
  AttachmentSampler() = default;
  explicit AttachmentSampler(std::span<const std::uint64_t> weights);

  void push_back(std::uint64_t weight);
  void add(NodeId item, std::int64_t delta);

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] std::uint64_t weight(NodeId item) const { return weights_.at(item); }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }

  /// Draws `count` distinct items in draw order. The sampler is left as it
  /// was. Throws GenerationError if fewer than `count` items can be drawn.
  std::vector<NodeId> draw_without_replacement(std::size_t count, Rng& rng);

 private:
  void tree_add(std::size_t index, std::int64_t delta);
  [[nodiscard]] std::size_t find(std::uint64_t target) const;

  std::vector<std::uint64_t> weights_;
  std::vector<std::uint64_t> tree_;
  std::uint64_t total_ = 0;
  std::size_t positive_ = 0;
};

struct GeneratedGraph {
  Graph graph;
  FeatureMatrix features;
};

/// K_m with i.i.d. U[0,1]^d features. Throws std::invalid_argument when m or d
/// is zero.
GeneratedGraph init_seed_graph(std::size_t m, std::size_t d, Rng& rng);

/// m distinct neighbours drawn by degree-proportional sequential sampling
/// without replacement, in draw order.
std::vector<NodeId> select_neighbors(const Graph& g, std::size_t m, Rng& rng);

/// Target correlations for the chosen neighbours, given their selection
/// weights (degrees before this iteration adds any edge) in draw order and
/// the total weight r of all existing nodes.
///
///   NoCorrelation: zeros
///   Simple:        k_i / r, the first-draw selection probability
///   Rescaled:      k_i / sum_j k_j over the chosen neighbours
///
/// With `renormalize`, Simple uses the conditional probability of each
/// draw instead, k_i / (r - sum_{j<i} k_j). Throws GenerationError if r
/// is zero.
std::vector<double> compute_correlations(std::span<const std::uint64_t> neighbor_weights,
                                         std::uint64_t total_weight, CorrelationMode mode,
                                         bool renormalize = false);

/// Same, reading weights out of a full degree snapshot.
std::vector<double> compute_correlations_from_degrees(std::span<const std::uint64_t> degrees,
                                                      std::span<const NodeId> neighbors,
                                                      CorrelationMode mode, bool renormalize = false);

/// One growth step's draw against a fixed graph: neighbours plus their target
/// correlations from the same degree snapshot.
AttachmentDraw attach(const Graph& g, std::size_t m, CorrelationMode mode, Rng& rng,
                      bool renormalize = false);

/// |Sigma_{m+1}| for the block covariance [[I_m, rho], [rho^T, 1]], computed
/// by the cofactor recursion |Sigma_{j+1}| = |Sigma_j| - rho_j^2.
double covariance_determinant(std::span<const double> rho);

/// Variance floor for the conditional Gaussian.
inline constexpr double kVarianceFloor = 1e-12;

/// One normal-space conditional draw per dimension:
///   x = rho^T Z + sqrt(max(eps, 1 - rho^T rho)) * g,   g ~ N(0, I_d)
/// where Z stacks the neighbour rows. If rho^T rho >= 1 (within 1e-9), rho is
/// shrunk so that rho^T rho = 1 - eps. Throws CovarianceError when
/// 1 - rho^T rho < -1e-9.
std::vector<double> sample_normal_conditional(std::span<const std::span<const double>> neighbor_rows,
                                              std::span<const double> rho_normal, std::size_t dim,
                                              Rng& rng);

/// Uniform-space wrapper: neighbour rows through Phi^-1, target correlations
/// through corr_normal_from_uniform, conditional draw, result through Phi.
std::vector<double> sample_feature_conditional(std::span<const std::span<const double>> neighbor_rows,
                                               std::span<const double> rho_uniform, Rng& rng);

/// Per-iteration record of the Simple-mode correlations k_i / r (draw order,
/// before any rescaling), independent of the mode actually used.
struct GrowthTrace {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::vector<double>> simple_rho;  // one entry per growth step
};

struct GenerateOptions {
  bool renormalize = false;
  GrowthTrace* trace = nullptr;
};

/// Grows BA(n, m) from K_m, sampling each new node's features conditionally
/// on its neighbours.
GeneratedGraph generate(std::size_t n, std::size_t m, std::size_t d, CorrelationMode mode, Rng& rng,
                        const GenerateOptions& options = {});

/// m(n) = max(1, floor(n / divisor)).
std::size_t dense_attachment(std::size_t n, std::size_t divisor);

}  // namespace corrba
