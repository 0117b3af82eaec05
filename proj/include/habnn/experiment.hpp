#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "habnn/backward.hpp"
#include "habnn/data.hpp"
#include "habnn/mc_oracle.hpp"
#include "json.hpp"

namespace habnn {

inline constexpr const char* kReportSchema = "habnn.report/1";
inline constexpr const char* kSoftwareVersion = "0.1.0";

/// Everything a train/sweep/bench invocation needs. Defaults follow the
/// reference protocol: one hidden layer of 50, nu0 = 12, scale0 = 0.01,
/// no normalization, 90/10 split, 100 runs.
struct RunSpec {
  std::optional<std::filesystem::path> data;  // synthetic linear data when unset
  CsvOptions csv;
  std::vector<std::size_t> hidden{50};
  double nu0 = 12.0;
  double scale0 = 0.01;
  double noise_var = 1.0;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  Normalization normalize = Normalization::kNone;
  bool ood = false;
  bool ood_std_from_train = false;
  double train_frac = 0.9;
  BackwardOptions backward;
  /// Worker threads for independent runs; 0 picks the hardware count.
  unsigned threads = 0;
  /// Rows of the synthetic dataset used when no file is given.
  std::size_t synthetic_rows = 500;

  void validate() const;
};

/// y = 2x + e, x ~ U(-2, 2), e ~ N(0, 0.1^2).
Dataset synthetic_linear(std::size_t n, std::uint64_t seed);

struct PhaseTimes {
  double split = 0.0;
  double train = 0.0;
  double evaluate = 0.0;
  double ood = 0.0;
};

struct RunResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<std::size_t> failed_sample;
  MetricSet metrics;
  std::optional<OodReport> ood;
  /// Dataset rows in the order they were used for training.
  std::vector<std::size_t> train_order;
  PhaseTimes times;
};

struct Aggregate {
  std::size_t count = 0;
  double median = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

Aggregate aggregate(std::vector<double> values);

struct ExperimentReport {
  RunSpec spec;
  std::string data_source;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<RunResult> runs;
  std::size_t failures = 0;
  Aggregate rmse;
  Aggregate nll;
  std::optional<Aggregate> delta_rmse;
  std::optional<Aggregate> delta_nll;
  double load_seconds = 0.0;
  double total_seconds = 0.0;

  nlohmann::json to_json() const;
  std::string summary() const;
};

/// Loads the data once, then split, normalize, init, train and evaluate per
/// run. Runs execute concurrently; results are ordered by run index.
ExperimentReport cmd_train_eval(const RunSpec& spec);
ExperimentReport train_eval(const RunSpec& spec, const Dataset& data, const std::string& source);

enum class SweepAxis { kScale0, kNu0, kDepth };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);
std::vector<double> default_sweep_values(SweepAxis axis);

struct SweepReport {
  SweepAxis axis = SweepAxis::kScale0;
  std::vector<double> values;
  std::vector<ExperimentReport> reports;

  std::size_t failures() const;
  nlohmann::json to_json() const;
  std::string table() const;
};

/// One train/eval report per value; depth values use hidden layers of the
/// first width in spec.hidden.
SweepReport cmd_sweep(const RunSpec& spec, SweepAxis axis, const std::vector<double>& values);

struct BenchRow {
  std::size_t width = 0;
  std::size_t weights = 0;
  double median_seconds_per_sample = 0.0;
};

struct BenchReport {
  std::size_t input_dim = 0;
  std::size_t samples = 0;
  double data_seconds = 0.0;  // excluded from the per-sample timings
  std::vector<BenchRow> rows;
  /// Median per-sample time of the last width over the first.
  double ratio = 0.0;
  double width_ratio = 0.0;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Per-sample training time for a single hidden layer of each width, median
/// over `samples` forward + backward steps.
BenchReport cmd_bench(const RunSpec& spec, const std::vector<std::size_t>& widths,
                      std::size_t samples = 200, std::size_t input_dim = 8);

enum class OracleSuite { kAll, kRelu, kPosterior, kLinear, kCross };
OracleSuite parse_oracle_suite(std::string_view name);

/// Runs the selected oracle checks and returns one report per check.
std::vector<oracle::OracleReport> cmd_oracle(OracleSuite suite,
                                             const oracle::OracleOptions& options);

/// The randomized scalar posterior configurations of the moment-matching
/// check: count configurations cycling nu through {5, 12, 50}.
std::vector<std::pair<oracle::ScalarJoint, oracle::ScalarPosterior>> posterior_configs(
    std::size_t count, std::uint64_t seed);

}  // namespace habnn
