#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "corrba/graphcore.hpp"

namespace corrba {

enum class ModelKind { GCN, GAT };

std::string_view to_string(ModelKind kind);  // "gcn" / "gat"
ModelKind parse_model_kind(std::string_view name);

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) { return std::span<double>(data).subspan(i * cols, cols); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data).subspan(i * cols, cols);
  }
};

/// Copies a feature matrix into a Matrix of the same shape.
Matrix to_matrix(const FeatureMatrix& features);

Matrix matmul(const Matrix& a, const Matrix& b);

inline constexpr std::size_t kLayerCount = 3;

struct GnnParams {
  ModelKind kind = ModelKind::GCN;
  std::array<Matrix, kLayerCount> weights;                  // d x d
  std::array<std::vector<double>, kLayerCount> attention;   // 2d each, GAT only
  Matrix head_weight;                                       // d x classes
  std::vector<double> head_bias;                            // classes

  [[nodiscard]] std::size_t dim() const noexcept { return weights[0].rows; }
  [[nodiscard]] std::size_t classes() const noexcept { return head_bias.size(); }
};

/// Untrained parameters: Glorot-uniform weights U[-b, b] with
/// b = sqrt(6 / (fan_in + fan_out)), zero head bias. Attention vectors are
/// treated as 2d x 1. Identical seeds give bit-identical parameters.
GnnParams init_params(ModelKind kind, std::size_t d, std::size_t classes, std::uint64_t seed);

/// ReLU(D^-1/2 (A + I) D^-1/2 H W), D the degree matrix of A + I.
Matrix gcn_layer(const Graph& g, const Matrix& h, const Matrix& w);

/// Per-node attention weights, aligned with [self, neighbors(i)...].
struct GatAttention {
  std::vector<std::size_t> offsets;  // node i owns [offsets[i], offsets[i+1])
  std::vector<double> alpha;
};

/// alpha_ij = softmax_j LeakyReLU_0.2(a^T [hw_i || hw_j]) over j in {i} and N(i).
/// `hw` is the already-transformed H W.
GatAttention gat_attention(const Graph& g, const Matrix& hw, std::span<const double> a);

/// Single-head GAT layer: ReLU(sum_j alpha_ij W h_j).
Matrix gat_layer(const Graph& g, const Matrix& h, const Matrix& w, std::span<const double> a);

/// Three layers of the parameterised kind, mean pooling, affine head and
/// softmax. Returns one probability per class.
std::vector<double> classify_forward(const GnnParams& params, const Graph& g, const Matrix& x);
std::vector<double> classify_forward(const GnnParams& params, const Graph& g, const FeatureMatrix& x);

}  // namespace corrba
