#include "corrba/graphcore.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace corrba {

Graph::Graph(std::size_t node_count) : adjacency_(node_count) {}

NodeId Graph::add_node() {
  adjacency_.emplace_back();
  return static_cast<NodeId>(adjacency_.size() - 1);
}

namespace {

// Sorted insert; appending is the common case because new nodes carry the
// largest index.
void insert_sorted(std::vector<NodeId>& list, NodeId v) {
  if (list.empty() || list.back() < v) {
    list.push_back(v);
    return;
  }
  list.insert(std::lower_bound(list.begin(), list.end(), v), v);
}

}  // namespace

void Graph::add_edge(NodeId u, NodeId v) {
  if (u >= node_count() || v >= node_count()) throw std::invalid_argument("add_edge: unknown node");
  if (u == v) throw std::invalid_argument("add_edge: self-loop");
  if (has_edge(u, v)) throw std::invalid_argument("add_edge: edge already present");
  insert_sorted(adjacency_[u], v);
  insert_sorted(adjacency_[v], u);
  ++edge_count_;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= node_count() || v >= node_count()) return false;
  const auto& a = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u] : adjacency_[v];
  const NodeId other = &a == &adjacency_[u] ? v : u;
  return std::binary_search(a.begin(), a.end(), other);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < node_count(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

FeatureMatrix::FeatureMatrix(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("FeatureMatrix: dimension must be positive");
}

void FeatureMatrix::append_row(std::span<const double> row) {
  if (row.size() != dim_) throw std::invalid_argument("FeatureMatrix: row width mismatch");
  for (double x : row) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("FeatureMatrix: entry outside [0, 1]");
  }
  values_.insert(values_.end(), row.begin(), row.end());
}

std::span<const double> FeatureMatrix::row(std::size_t i) const {
  if (i >= rows()) throw std::out_of_range("FeatureMatrix: row index");
  return std::span<const double>(values_).subspan(i * dim_, dim_);
}

std::size_t DegreeHistogram::node_count() const {
  std::size_t n = 0;
  for (const auto& [k, count] : counts) n += count;
  return n;
}

DegreeHistogram degree_histogram(const Graph& g) {
  DegreeHistogram h;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const std::size_t k = g.degree(v);
    ++h.counts[k];
    h.total_degree += k;
  }
  return h;
}

void write_graph_dump(std::ostream& out, const Graph& g, const FeatureMatrix& features) {
  if (features.rows() != g.node_count()) {
    throw std::invalid_argument("write_graph_dump: feature rows do not match node count");
  }
  out << g.node_count() << ' ' << g.edge_count() << ' ' << features.dim() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
  char buf[32];
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      if (j != 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

namespace {

[[noreturn]] void dump_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("graph dump line " + std::to_string(line) + ": " + what);
}

}  // namespace

GraphDump read_graph_dump(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  auto next_line = [&](const char* what) -> std::istringstream {
    if (!std::getline(in, text)) dump_error(line_no + 1, std::string("missing ") + what);
    ++line_no;
    return std::istringstream(text);
  };

  std::size_t n = 0;
  std::size_t e = 0;
  std::size_t d = 0;
  {
    auto ls = next_line("header");
    if (!(ls >> n >> e >> d) || d == 0) dump_error(line_no, "expected header 'n E d'");
  }
  GraphDump dump{Graph(n), FeatureMatrix(d)};
  for (std::size_t i = 0; i < e; ++i) {
    auto ls = next_line("edge");
    long long u = -1;
    long long v = -1;
    if (!(ls >> u >> v) || u < 0 || v < 0) dump_error(line_no, "expected edge 'u v'");
    try {
      dump.graph.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v));
    } catch (const std::invalid_argument& ex) {
      dump_error(line_no, ex.what());
    }
  }
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto ls = next_line("feature row");
    for (double& x : row) {
      if (!(ls >> x)) dump_error(line_no, "expected " + std::to_string(d) + " feature values");
    }
    try {
      dump.features.append_row(row);
    } catch (const std::invalid_argument& ex) {
      dump_error(line_no, ex.what());
    }
  }
  return dump;
}

}  // namespace corrba
