#include "corrba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace corrba {

std::string_view to_string(Density density) {
  switch (density) {
    case Density::Sparse: return "sparse";
    case Density::Dense: return "dense";
  }
  return "?";
}

Density parse_density(std::string_view name) {
  if (name == "sparse") return Density::Sparse;
  if (name == "dense") return Density::Dense;
  throw std::invalid_argument("unknown density '" + std::string(name) + "'");
}

std::string_view to_string(Convergence c) {
  switch (c) {
    case Convergence::Converging: return "Converging";
    case Convergence::NotConverging: return "NotConverging";
    case Convergence::NotApplicable: return "NotApplicable";
  }
  return "?";
}

std::vector<std::size_t> default_sizes() {
  constexpr std::size_t count = 12;
  constexpr double lo = 25.0;
  constexpr double hi = 2000.0;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
    sizes.push_back(static_cast<std::size_t>(std::llround(x)));
  }
  return sizes;
}

// --- config ------------------------------------------------------------------

namespace {

template <typename T>
void require_unique(const std::vector<T>& items, const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (items[i] == items[j]) throw std::invalid_argument(std::string(what) + " lists a value twice");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("sizes must not be empty");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw std::invalid_argument("sizes must be strictly increasing");
  }
  if (replicates < 2) throw std::invalid_argument("replicates must be at least 2");
  if (d == 0) throw std::invalid_argument("d must be positive");
  if (sparse_m == 0) throw std::invalid_argument("sparse_m must be positive");
  if (dense_divisor == 0) throw std::invalid_argument("dense_divisor must be positive");
  if (sizes.front() < sparse_m) throw std::invalid_argument("every size must be at least sparse_m");
  if (modes.empty() || models.empty() || densities.empty()) {
    throw std::invalid_argument("modes, models and densities must not be empty");
  }
  require_unique(modes, "modes");
  require_unique(models, "models");
  require_unique(densities, "densities");
  if (!(late_frac > 0.0 && late_frac <= 1.0)) throw std::invalid_argument("late_frac must lie in (0, 1]");
}

std::size_t ExperimentConfig::attachment(Density density, std::size_t n) const {
  return density == Density::Sparse ? sparse_m : dense_attachment(n, dense_divisor);
}

ExperimentConfig parse_config(std::string_view json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");

  static const std::set<std::string> known{"sizes",     "replicates", "d",         "sparse_m",
                                           "dense_divisor", "modes",  "models",    "densities",
                                           "seed",      "late_frac",  "rho_renormalize"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  ExperimentConfig c;
  try {
    if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
    if (j.contains("sparse_m")) c.sparse_m = j.at("sparse_m").get<std::size_t>();
    if (j.contains("dense_divisor")) c.dense_divisor = j.at("dense_divisor").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("late_frac")) c.late_frac = j.at("late_frac").get<double>();
    if (j.contains("rho_renormalize")) c.rho_renormalize = j.at("rho_renormalize").get<bool>();
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& s : j.at("modes")) c.modes.push_back(parse_correlation_mode(s.get<std::string>()));
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& s : j.at("models")) c.models.push_back(parse_model_kind(s.get<std::string>()));
    }
    if (j.contains("densities")) {
      c.densities.clear();
      for (const auto& s : j.at("densities")) c.densities.push_back(parse_density(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["sizes"] = c.sizes;
  j["replicates"] = c.replicates;
  j["d"] = c.d;
  j["sparse_m"] = c.sparse_m;
  j["dense_divisor"] = c.dense_divisor;
  std::vector<std::string> names;
  for (auto m : c.modes) names.emplace_back(to_string(m));
  j["modes"] = names;
  names.clear();
  for (auto m : c.models) names.emplace_back(to_string(m));
  j["models"] = names;
  names.clear();
  for (auto m : c.densities) names.emplace_back(to_string(m));
  j["densities"] = names;
  j["seed"] = c.seed;
  j["late_frac"] = c.late_frac;
  j["rho_renormalize"] = c.rho_renormalize;
  return j.dump(2);
}

std::string Case::name() const {
  return std::string(to_string(model)) + "/" + std::string(to_string(density)) + "/" + std::string(to_string(mode));
}

std::vector<Case> cases(const ExperimentConfig& config) {
  std::vector<Case> out;
  for (auto model : config.models) {
    for (auto density : config.densities) {
      for (auto mode : config.modes) out.push_back({model, density, mode});
    }
  }
  return out;
}

// --- Experiment --------------------------------------------------------------

namespace {
constexpr std::uint64_t kParamsTag = 0x706172616d73ULL;  // "params"
constexpr std::uint64_t kGraphTag = 0x6772617068ULL;     // "graph"
}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const Rng root(config_.seed);
  for (ModelKind kind : {ModelKind::GCN, ModelKind::GAT}) {
    const auto seed = root.derive({kParamsTag, static_cast<std::uint64_t>(kind)}).seed();
    params_[static_cast<std::size_t>(kind)] = init_params(kind, config_.d, kClassCount, seed);
  }
}

const GnnParams& Experiment::params(ModelKind kind) const { return params_[static_cast<std::size_t>(kind)]; }

GeneratedGraph Experiment::generate_graph(Density density, CorrelationMode mode, std::size_t n,
                                          std::size_t replicate, std::size_t attempt) const {
  Rng rng = Rng(config_.seed).derive({kGraphTag, static_cast<std::uint64_t>(density), n, replicate, attempt});
  GenerateOptions options;
  options.renormalize = config_.rho_renormalize;
  return generate(n, config_.attachment(density, n), config_.d, mode, rng, options);
}

std::optional<GeneratedGraph> Experiment::generate_with_retries(Density density, CorrelationMode mode,
                                                                std::size_t n, std::size_t replicate,
                                                                std::size_t* attempts,
                                                                std::string* last_error) const {
  for (std::size_t attempt = 0; attempt <= kMaxRetries; ++attempt) {
    if (attempts != nullptr) *attempts = attempt + 1;
    try {
      return generate_graph(density, mode, n, replicate, attempt);
    } catch (const GenerationError& e) {
      if (last_error != nullptr) *last_error = e.what();
    }
  }
  return std::nullopt;
}

ReplicateOutcome Experiment::run_replicate(const Case& c, std::size_t n, std::size_t replicate) const {
  ReplicateOutcome out;
  auto graph = generate_with_retries(c.density, c.mode, n, replicate, &out.attempts, &out.last_error);
  if (graph) out.probabilities = classify_forward(params(c.model), graph->graph, graph->features);
  return out;
}

// --- sweep -------------------------------------------------------------------

bool row_less(const SweepRow& a, const SweepRow& b) {
  return std::forward_as_tuple(to_string(a.model), to_string(a.density), to_string(a.mode), a.n, a.class_index) <
         std::forward_as_tuple(to_string(b.model), to_string(b.density), to_string(b.mode), b.n, b.class_index);
}

std::vector<SweepRow> SweepResult::rows_for(const Case& c) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows) {
    if (r.case_of() == c) out.push_back(r);
  }
  return out;
}

std::vector<Case> SweepResult::cases() const {
  std::vector<Case> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.case_of()) == out.end()) out.push_back(r.case_of());
  }
  return out;
}

namespace {

struct GraphTask {
  Density density;
  CorrelationMode mode;
  std::size_t n;
  std::size_t replicate;
};

struct GraphTaskResult {
  bool ok = false;
  std::vector<std::vector<double>> probabilities;  // one per config model
};

void dump_graph(const std::filesystem::path& dir, const GraphTask& task, const GeneratedGraph& g) {
  const auto file = dir / (std::string(to_string(task.density)) + "_" + std::string(to_string(task.mode)) + "_n" +
                           std::to_string(task.n) + "_r" + std::to_string(task.replicate) + ".txt");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write graph dump " + file.string());
  write_graph_dump(out, g.graph, g.features);
}

}  // namespace

std::vector<SweepRow> summarize_replicates(const Case& c, std::size_t n,
                                           std::span<const std::vector<double>> probabilities,
                                           std::size_t attempted) {
  const std::size_t failed = attempted - std::min(attempted, probabilities.size());
  if (static_cast<double>(failed) > 0.1 * static_cast<double>(attempted) || probabilities.size() < 2) {
    throw SweepError("case " + c.name() + " at n=" + std::to_string(n) + ": " + std::to_string(failed) + " of " +
                     std::to_string(attempted) + " replicates failed");
  }
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    double mean = 0.0;
    for (const auto& p : probabilities) mean += p.at(k);
    mean /= static_cast<double>(probabilities.size());
    double ss = 0.0;
    for (const auto& p : probabilities) ss += (p[k] - mean) * (p[k] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(probabilities.size() - 1));
    rows.push_back({c.model, c.density, c.mode, n, k, mean, sd, probabilities.size()});
  }
  return rows;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  const Experiment experiment(config);
  if (options.dump_dir) std::filesystem::create_directories(*options.dump_dir);

  std::vector<GraphTask> tasks;
  for (auto density : config.densities) {
    for (auto mode : config.modes) {
      for (auto n : config.sizes) {
        for (std::size_t r = 0; r < config.replicates; ++r) tasks.push_back({density, mode, n, r});
      }
    }
  }

  std::vector<GraphTaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const auto& task = tasks[i];
        auto graph = experiment.generate_with_retries(task.density, task.mode, task.n, task.replicate);
        if (!graph) continue;
        if (options.dump_dir) dump_graph(*options.dump_dir, task, *graph);
        const Matrix x = to_matrix(graph->features);
        auto& res = results[i];
        for (auto model : config.models) {
          res.probabilities.push_back(classify_forward(experiment.params(model), graph->graph, x));
        }
        res.ok = true;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  // Reduce in task order, which is fixed by the config alone.
  SweepResult result;
  const std::size_t reps = config.replicates;
  for (std::size_t block = 0; block < tasks.size(); block += reps) {
    const GraphTask& head = tasks[block];
    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
      std::vector<std::vector<double>> ok;
      for (std::size_t r = 0; r < reps; ++r) {
        if (results[block + r].ok) ok.push_back(std::move(results[block + r].probabilities[mi]));
      }
      const auto rows = summarize_replicates({config.models[mi], head.density, head.mode}, head.n, ok, reps);
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), row_less);
  return result;
}

// --- diagnostics -------------------------------------------------------------

ConvergenceDiagnostic convergence_diagnostic(std::span<const SweepRow> rows) {
  if (rows.empty()) throw std::invalid_argument("convergence_diagnostic: no rows");
  const Case c = rows.front().case_of();
  std::map<std::size_t, double> max_std;  // n -> max over classes
  for (const auto& r : rows) {
    if (!(r.case_of() == c)) throw std::invalid_argument("convergence_diagnostic: rows span several cases");
    auto [it, inserted] = max_std.try_emplace(r.n, r.std_prob);
    if (!inserted) it->second = std::max(it->second, r.std_prob);
  }
  if (max_std.size() < 4) throw std::invalid_argument("convergence_diagnostic: need at least 4 sizes");
  const auto ref = max_std.lower_bound(kReferenceMinSize);
  if (ref == max_std.end()) throw std::invalid_argument("convergence_diagnostic: no size >= 100");

  ConvergenceDiagnostic diag;
  diag.reference_n = ref->first;
  diag.largest_n = max_std.rbegin()->first;
  if (ref->second < 1e-12) {
    diag.tail_std_ratio = std::nan("");
    diag.classification = Convergence::NotApplicable;
    return diag;
  }
  diag.tail_std_ratio = max_std.rbegin()->second / ref->second;
  diag.classification =
      diag.tail_std_ratio < kConvergenceThreshold ? Convergence::Converging : Convergence::NotConverging;
  return diag;
}

// --- CSV ---------------------------------------------------------------------

CsvParseError::CsvParseError(std::size_t line, const std::string& what)
    : std::runtime_error("csv line " + std::to_string(line) + ": " + what), line_(line) {}

void write_csv(const SweepResult& result, std::ostream& out) {
  std::vector<SweepRow> rows = result.rows;
  std::stable_sort(rows.begin(), rows.end(), row_less);
  out << kCsvHeader << '\n';
  char mean[32];
  char sd[32];
  for (const auto& r : rows) {
    std::snprintf(mean, sizeof mean, "%.17g", r.mean_prob);
    std::snprintf(sd, sizeof sd, "%.17g", r.std_prob);
    out << to_string(r.model) << ',' << to_string(r.density) << ',' << to_string(r.mode) << ',' << r.n << ','
        << r.class_index << ',' << mean << ',' << sd << ',' << r.replicates << '\n';
  }
}

void write_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(result, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw CsvParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

SweepResult read_csv(std::istream& in) {
  std::string text;
  std::size_t line = 1;
  if (!std::getline(in, text)) throw CsvParseError(line, "missing header");
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text != kCsvHeader) throw CsvParseError(line, "unexpected header '" + text + "'");

  SweepResult result;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(text);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 8) throw CsvParseError(line, "expected 8 fields, got " + std::to_string(fields.size()));

    SweepRow row;
    try {
      row.model = parse_model_kind(fields[0]);
      row.density = parse_density(fields[1]);
      row.mode = parse_correlation_mode(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw CsvParseError(line, e.what());
    }
    row.n = parse_number<std::size_t>(fields[3], line, "n");
    row.class_index = parse_number<std::size_t>(fields[4], line, "class");
    row.mean_prob = parse_number<double>(fields[5], line, "mean_prob");
    row.std_prob = parse_number<double>(fields[6], line, "std_prob");
    row.replicates = parse_number<std::size_t>(fields[7], line, "replicates");
    if (row.class_index >= kClassCount) throw CsvParseError(line, "class index out of range");
    if (row.std_prob < 0.0) throw CsvParseError(line, "negative std_prob");
    result.rows.push_back(row);
  }
  return result;
}

SweepResult read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace corrba
