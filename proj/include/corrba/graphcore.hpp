#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace corrba {

using NodeId = std::uint32_t;

/// Undirected simple graph. Nodes are 0..n-1 in insertion order; each node
/// keeps a sorted neighbour list, so degree(i) is always the number of
/// incident edges.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count);

  NodeId add_node();

  /// Throws std::invalid_argument on self-loops, unknown nodes and edges that
  /// already exist.
  void add_edge(NodeId u, NodeId v);

  [[nodiscard]] bool has_edge(NodeId u, NodeId v) const;

  [[nodiscard]] std::size_t node_count() const noexcept { return adjacency_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }
  [[nodiscard]] std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId v) const { return adjacency_.at(v); }
  [[nodiscard]] std::uint64_t degree_sum() const noexcept { return 2 * static_cast<std::uint64_t>(edge_count_); }

  /// Edges as (u, v) with u < v, in lexicographic order.
  [[nodiscard]] std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Row-major n x d node features in uniform space; every entry is in [0, 1].
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t dim);

  /// Appends one node's feature row. Throws std::invalid_argument if the row
  /// has the wrong width or any entry falls outside [0, 1].
  void append_row(std::span<const double> row);

  [[nodiscard]] std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const;
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values_.at(i * dim_ + j); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct DegreeHistogram {
  std::map<std::size_t, std::size_t> counts;  // degree k -> n_k
  std::uint64_t total_degree = 0;             // r = sum_k k * n_k

  [[nodiscard]] std::size_t node_count() const;
};

DegreeHistogram degree_histogram(const Graph& g);

/// Plain-text dump: header "n E d", E lines "u v", then n lines of d feature
/// values printed with 17 significant digits.
void write_graph_dump(std::ostream& out, const Graph& g, const FeatureMatrix& features);

struct GraphDump {
  Graph graph;
  FeatureMatrix features;
};

/// Throws std::runtime_error naming the offending line on malformed input.
GraphDump read_graph_dump(std::istream& in);

}  // namespace corrba
