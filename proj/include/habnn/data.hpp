#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "habnn/layer.hpp"
#include "habnn/tdist.hpp"

namespace habnn {

/// Raised for unreadable or malformed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix features;  // N x d
  std::vector<double> targets;
  std::vector<std::string> feature_names;

  std::size_t size() const { return targets.size(); }
  std::size_t dim() const { return features.cols(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  Dataset subset(std::span<const std::size_t> indices) const;
};

struct CsvOptions {
  bool has_header = false;
  /// Zero-based target column; the last column when unset.
  std::optional<std::size_t> target_column;
};

/// Comma separated, '.' decimal point, no quoting. Non-numeric or
/// non-finite cells raise DataError naming the 1-based row and column.
Dataset parse_csv(std::istream& in, const CsvOptions& options = {});
Dataset parse_csv_text(std::string_view text, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded shuffle, then the first round(fraction * N) rows train.
SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Seeded permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

enum class Normalization { kNone, kZScore };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization mode);

struct NormalizationParams {
  Normalization mode = Normalization::kNone;
  std::vector<double> mean;
  std::vector<double> stddev;  // 1 for constant features
};

struct NormalizedSplit {
  Dataset train;
  Dataset test;
  NormalizationParams params;
};

/// Fits feature statistics on train only and applies them to both sets.
/// Targets are left in their original units.
NormalizedSplit normalize_fit_apply(const Dataset& train, const Dataset& test, Normalization mode);

enum class OodScenario { kScale01, kScale2, kPlus3Std };

inline constexpr std::array<OodScenario, 3> kOodScenarios = {
    OodScenario::kScale01, OodScenario::kScale2, OodScenario::kPlus3Std};

std::string_view to_string(OodScenario scenario);

/// Per-feature population standard deviation.
std::vector<double> feature_stddev(const Dataset& data);

/// Scales features by 0.1 or 2, or shifts each by 3 standard deviations of
/// the transformed set itself. Targets are untouched.
Dataset ood_transform(const Dataset& test, OodScenario scenario);
/// As above, but the +3 std shift uses the standard deviations of std_source.
Dataset ood_transform(const Dataset& test, OodScenario scenario, const Dataset& std_source);

struct MetricSet {
  double rmse = 0.0;
  double nll = 0.0;
  std::size_t n = 0;
  double mean_predictive_variance = 0.0;
};

/// RMSE of the locations and mean negative t log density of the targets.
MetricSet metrics_from_predictions(std::span<const UnivariateT> predictive,
                                   std::span<const double> variances,
                                   std::span<const double> targets);

/// Predicts every row; the predictive t has scale (nu-2)/nu * (Var_y + noise_var).
MetricSet evaluate(std::span<const LayerState> network, const Dataset& test, double noise_var);

struct OodReport {
  MetricSet in_distribution;
  std::array<MetricSet, 3> scenarios;
  /// Percent; empty when the in-distribution value is zero.
  std::optional<double> delta_nll;
  std::optional<double> delta_rmse;
};

/// Mean absolute relative deviation of the three scenarios, in percent.
OodReport ood_relative_errors(const MetricSet& in_distribution,
                              const std::array<MetricSet, 3>& scenarios);

}  // namespace habnn
