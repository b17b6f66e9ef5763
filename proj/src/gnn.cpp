#include "corrba/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "corrba/randkit.hpp"

namespace corrba {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GCN: return "gcn";
    case ModelKind::GAT: return "gat";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gcn") return ModelKind::GCN;
  if (name == "gat") return ModelKind::GAT;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

Matrix to_matrix(const FeatureMatrix& features) {
  Matrix m(features.rows(), features.dim());
  std::copy(features.values().begin(), features.values().end(), m.data.begin());
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

namespace {

void glorot_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : m.data) x = bound * (2.0 * rng.uniform() - 1.0);
}

void relu_inplace(Matrix& m) {
  for (double& x : m.data) x = std::max(0.0, x);
}

void check_layer_shapes(const Graph& g, const Matrix& h, const Matrix& w) {
  if (h.rows != g.node_count()) throw std::invalid_argument("layer: feature rows != node count");
  if (h.cols != w.rows) throw std::invalid_argument("layer: feature width != weight rows");
}

}  // namespace

GnnParams init_params(ModelKind kind, std::size_t d, std::size_t classes, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("init_params: d must be positive");
  if (classes < 2) throw std::invalid_argument("init_params: need at least two classes");

  Rng rng(seed);
  GnnParams p;
  p.kind = kind;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    p.weights[l] = Matrix(d, d);
    glorot_fill(p.weights[l], d, d, rng);
    if (kind == ModelKind::GAT) {
      Matrix att(2 * d, 1);
      glorot_fill(att, 2 * d, 1, rng);
      p.attention[l] = std::move(att.data);
    }
  }
  p.head_weight = Matrix(d, classes);
  glorot_fill(p.head_weight, d, classes, rng);
  p.head_bias.assign(classes, 0.0);
  return p;
}

Matrix gcn_layer(const Graph& g, const Matrix& h, const Matrix& w) {
  check_layer_shapes(g, h, w);
  const Matrix hw = matmul(h, w);
  const std::size_t n = g.node_count();

  std::vector<double> inv_sqrt_deg(n);
  for (NodeId i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));

  Matrix out(n, w.cols);
  for (NodeId i = 0; i < n; ++i) {
    auto acc = out.row(i);
    const double di = inv_sqrt_deg[i];
    auto accumulate = [&](NodeId j) {
      const double c = di * inv_sqrt_deg[j];
      const auto src = hw.row(j);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += c * src[k];
    };
    accumulate(i);
    for (NodeId j : g.neighbors(i)) accumulate(j);
  }
  relu_inplace(out);
  return out;
}

GatAttention gat_attention(const Graph& g, const Matrix& hw, std::span<const double> a) {
  const std::size_t n = g.node_count();
  const std::size_t d = hw.cols;
  if (hw.rows != n) throw std::invalid_argument("gat_attention: feature rows != node count");
  if (a.size() != 2 * d) throw std::invalid_argument("gat_attention: attention vector must have 2d entries");

  // a^T [hw_i || hw_j] splits into a target part and a source part.
  std::vector<double> target_score(n, 0.0);
  std::vector<double> source_score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = hw.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      target_score[i] += a[k] * r[k];
      source_score[i] += a[d + k] * r[k];
    }
  }

  auto leaky = [](double x) { return x > 0.0 ? x : 0.2 * x; };

  GatAttention att;
  att.offsets.resize(n + 1, 0);
  for (NodeId i = 0; i < n; ++i) att.offsets[i + 1] = att.offsets[i] + g.degree(i) + 1;
  att.alpha.resize(att.offsets[n]);

  for (NodeId i = 0; i < n; ++i) {
    const auto nb = g.neighbors(i);
    double* e = att.alpha.data() + att.offsets[i];
    e[0] = leaky(target_score[i] + source_score[i]);
    for (std::size_t k = 0; k < nb.size(); ++k) e[k + 1] = leaky(target_score[i] + source_score[nb[k]]);

    const std::size_t len = nb.size() + 1;
    const double top = *std::max_element(e, e + len);
    double sum = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      e[k] = std::exp(e[k] - top);
      sum += e[k];
    }
    for (std::size_t k = 0; k < len; ++k) e[k] /= sum;
  }
  return att;
}

Matrix gat_layer(const Graph& g, const Matrix& h, const Matrix& w, std::span<const double> a) {
  check_layer_shapes(g, h, w);
  const Matrix hw = matmul(h, w);
  const GatAttention att = gat_attention(g, hw, a);
  const std::size_t n = g.node_count();

  Matrix out(n, w.cols);
  for (NodeId i = 0; i < n; ++i) {
    auto acc = out.row(i);
    const double* alpha = att.alpha.data() + att.offsets[i];
    auto accumulate = [&](double c, NodeId j) {
      const auto src = hw.row(j);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += c * src[k];
    };
    accumulate(alpha[0], i);
    const auto nb = g.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) accumulate(alpha[k + 1], nb[k]);
  }
  relu_inplace(out);
  return out;
}

std::vector<double> classify_forward(const GnnParams& params, const Graph& g, const Matrix& x) {
  if (x.rows != g.node_count()) throw std::invalid_argument("classify_forward: feature rows != node count");
  if (x.rows == 0) throw std::invalid_argument("classify_forward: empty graph");

  Matrix h = x;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    h = params.kind == ModelKind::GCN ? gcn_layer(g, h, params.weights[l])
                                      : gat_layer(g, h, params.weights[l], params.attention[l]);
  }

  std::vector<double> pooled(h.cols, 0.0);
  for (std::size_t i = 0; i < h.rows; ++i) {
    const auto r = h.row(i);
    for (std::size_t k = 0; k < h.cols; ++k) pooled[k] += r[k];
  }
  for (double& v : pooled) v /= static_cast<double>(h.rows);

  const std::size_t classes = params.classes();
  if (params.head_weight.rows != pooled.size() || params.head_weight.cols != classes) {
    throw std::invalid_argument("classify_forward: head shape mismatch");
  }
  std::vector<double> logits(params.head_bias);
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    for (std::size_t c = 0; c < classes; ++c) logits[c] += pooled[k] * params.head_weight(k, c);
  }

  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    sum += z;
  }
  for (double& z : logits) z /= sum;
  return logits;
}

std::vector<double> classify_forward(const GnnParams& params, const Graph& g, const FeatureMatrix& x) {
  return classify_forward(params, g, to_matrix(x));
}

}  // namespace corrba
