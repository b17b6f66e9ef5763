#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corrba/bagen.hpp"
#include "corrba/gnn.hpp"

namespace corrba {

enum class Density { Sparse, Dense };

std::string_view to_string(Density density);  // "sparse" / "dense"
Density parse_density(std::string_view name);

inline constexpr std::size_t kClassCount = 3;

/// 12 log-spaced sizes from 25 to 2000.
std::vector<std::size_t> default_sizes();

struct ExperimentConfig {
  std::vector<std::size_t> sizes = default_sizes();
  std::size_t replicates = 30;
  std::size_t d = 32;
  std::size_t sparse_m = 5;
  std::size_t dense_divisor = 5;
  std::vector<CorrelationMode> modes{CorrelationMode::NoCorrelation, CorrelationMode::Simple,
                                     CorrelationMode::Rescaled};
  std::vector<ModelKind> models{ModelKind::GCN, ModelKind::GAT};
  std::vector<Density> densities{Density::Sparse, Density::Dense};
  std::uint64_t seed = 20240601;
  double late_frac = 0.25;
  bool rho_renormalize = false;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  /// m for a graph of size n: sparse_m, or max(1, n / dense_divisor).
  [[nodiscard]] std::size_t attachment(Density density, std::size_t n) const;
};

/// Reads a JSON object whose keys are the ExperimentConfig field names; every
/// key is optional, unknown keys are rejected. The result is validated.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

struct Case {
  ModelKind model = ModelKind::GCN;
  Density density = Density::Sparse;
  CorrelationMode mode = CorrelationMode::NoCorrelation;

  [[nodiscard]] std::string name() const;  // e.g. "gat/sparse/rescaled"
  bool operator==(const Case&) const = default;
};

/// Every (model, density, mode) combination the config asks for.
std::vector<Case> cases(const ExperimentConfig& config);

struct ReplicateOutcome {
  std::vector<double> probabilities;  // empty if every attempt failed
  std::size_t attempts = 0;
  std::string last_error;

  [[nodiscard]] bool ok() const noexcept { return !probabilities.empty(); }
};

inline constexpr std::size_t kMaxRetries = 3;

/// Holds a validated config and the model parameters, which are drawn once
/// per model kind from the config seed and reused for every size and
/// replicate.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
  [[nodiscard]] const GnnParams& params(ModelKind kind) const;

  /// One generation attempt. The stream is keyed by (seed, density, n,
  /// replicate, attempt) and not by model or mode, so all modes share the
  /// same topology draw and every model sees the same graphs.
  [[nodiscard]] GeneratedGraph generate_graph(Density density, CorrelationMode mode, std::size_t n,
                                              std::size_t replicate, std::size_t attempt) const;

  /// Generation with up to kMaxRetries retries on GenerationError.
  [[nodiscard]] std::optional<GeneratedGraph> generate_with_retries(Density density, CorrelationMode mode,
                                                                    std::size_t n, std::size_t replicate,
                                                                    std::size_t* attempts = nullptr,
                                                                    std::string* last_error = nullptr) const;

  /// Generates a graph and returns the model's class distribution on it.
  [[nodiscard]] ReplicateOutcome run_replicate(const Case& c, std::size_t n, std::size_t replicate) const;

 private:
  ExperimentConfig config_;
  std::array<GnnParams, 2> params_;
};

struct SweepRow {
  ModelKind model = ModelKind::GCN;
  Density density = Density::Sparse;
  CorrelationMode mode = CorrelationMode::NoCorrelation;
  std::size_t n = 0;
  std::size_t class_index = 0;
  double mean_prob = 0.0;
  double std_prob = 0.0;  // unbiased (n - 1) estimator
  std::size_t replicates = 0;

  [[nodiscard]] Case case_of() const { return {model, density, mode}; }
  bool operator==(const SweepRow&) const = default;
};

/// Row order used for CSV output: (model, density, corr_mode) by name, then
/// n and class numerically.
bool row_less(const SweepRow& a, const SweepRow& b);

struct SweepResult {
  std::vector<SweepRow> rows;

  [[nodiscard]] std::vector<SweepRow> rows_for(const Case& c) const;
  [[nodiscard]] std::vector<Case> cases() const;  // in row order
};

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepOptions {
  std::size_t workers = 1;
  std::optional<std::filesystem::path> dump_dir;
};

/// Mean and unbiased std per class over the successful replicates of one
/// (case, n). Throws SweepError if more than 10% of the `attempted`
/// replicates are missing or fewer than two succeeded.
std::vector<SweepRow> summarize_replicates(const Case& c, std::size_t n,
                                           std::span<const std::vector<double>> probabilities,
                                           std::size_t attempted);

/// Runs every case over every size. Results do not depend on the worker
/// count. Throws SweepError if more than 10% of a case's replicates at some
/// size fail after retries.
SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

enum class Convergence { Converging, NotConverging, NotApplicable };
std::string_view to_string(Convergence c);

inline constexpr double kConvergenceThreshold = 0.5;
inline constexpr std::size_t kReferenceMinSize = 100;

struct ConvergenceDiagnostic {
  double tail_std_ratio = 0.0;
  Convergence classification = Convergence::NotApplicable;
  std::size_t reference_n = 0;
  std::size_t largest_n = 0;
};

/// tail_std_ratio = (max-class std at the largest n) / (max-class std at the
/// smallest n >= 100); Converging iff the ratio is below 0.5. Rows must
/// belong to a single case and cover at least four sizes.
ConvergenceDiagnostic convergence_diagnostic(std::span<const SweepRow> rows);

inline constexpr std::string_view kCsvHeader = "model,density,corr_mode,n,class,mean_prob,std_prob,replicates";

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Header plus one line per row, sorted with row_less, floats at 17
/// significant digits.
void write_csv(const SweepResult& result, std::ostream& out);
void write_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult read_csv(std::istream& in);
SweepResult read_csv(const std::filesystem::path& path);

}  // namespace corrba
