#include "habnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "habnn/forward.hpp"
#include "habnn/specfn.hpp"

namespace habnn {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError("row " + std::to_string(row) + " column " + std::to_string(col) +
                    ": not a number: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw DataError("row " + std::to_string(row) + " column " + std::to_string(col) +
                    ": non-finite value '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(indices.size(), dim());
  out.targets.resize(indices.size());
  out.feature_names = feature_names;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
    out.targets[k] = targets[indices[k]];
  }
  return out;
}

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (header_pending) {
      for (auto f : fields) header.emplace_back(trim(f));
      width = fields.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " columns, found " + std::to_string(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) values[c] = parse_cell(fields[c], line_no, c + 1);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("no data rows");
  if (width < 2) throw DataError("need at least one feature column and one target column");
  const std::size_t target = options.target_column.value_or(width - 1);
  if (target >= width) {
    throw DataError("target column " + std::to_string(target) + " out of range for " +
                    std::to_string(width) + " columns");
  }

  Dataset out;
  out.features = Matrix(rows.size(), width - 1);
  out.targets.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == target) {
        out.targets[r] = rows[r][c];
      } else {
        out.features(r, k++) = rows[r][c];
      }
    }
  }
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != target) out.feature_names.push_back(header[c]);
    }
  }
  return out;
}

Dataset parse_csv_text(std::string_view text, const CsvOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_csv(in, options);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return parse_csv(in, options);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

SplitResult split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  if (data.size() < 2) throw std::invalid_argument("need at least two rows to split");
  const auto idx = permutation(data.size(), seed);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * data.size()));
  n_train = std::clamp<std::size_t>(n_train, 1, data.size() - 1);

  SplitResult out;
  out.train_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  out.train = data.subset(out.train_indices);
  out.test = data.subset(out.test_indices);
  return out;
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::kNone;
  if (name == "zscore") return Normalization::kZScore;
  throw std::invalid_argument("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Normalization mode) {
  return mode == Normalization::kNone ? "none" : "zscore";
}

std::vector<double> feature_stddev(const Dataset& data) {
  const std::size_t d = data.dim();
  std::vector<double> mean(d, 0.0);
  std::vector<double> sd(d, 0.0);
  if (data.size() == 0) return sd;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.features(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double r = data.features(i, j) - mean[j];
      sd[j] += r * r;
    }
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(data.size()));
  return sd;
}

NormalizedSplit normalize_fit_apply(const Dataset& train, const Dataset& test, Normalization mode) {
  NormalizedSplit out{train, test, {}};
  out.params.mode = mode;
  const std::size_t d = train.dim();
  out.params.mean.assign(d, 0.0);
  out.params.stddev.assign(d, 1.0);
  if (mode == Normalization::kNone) return out;

  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out.params.mean[j] += train.features(i, j);
  }
  for (double& m : out.params.mean) m /= static_cast<double>(train.size());
  const auto sd = feature_stddev(train);
  for (std::size_t j = 0; j < d; ++j) out.params.stddev[j] = sd[j] > 0.0 ? sd[j] : 1.0;

  auto apply = [&](Dataset& ds) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        ds.features(i, j) = (ds.features(i, j) - out.params.mean[j]) / out.params.stddev[j];
      }
    }
  };
  apply(out.train);
  apply(out.test);
  return out;
}

std::string_view to_string(OodScenario scenario) {
  switch (scenario) {
    case OodScenario::kScale01: return "scale01";
    case OodScenario::kScale2: return "scale2";
    case OodScenario::kPlus3Std: return "plus3std";
  }
  return "unknown";
}

Dataset ood_transform(const Dataset& test, OodScenario scenario) {
  return ood_transform(test, scenario, test);
}

Dataset ood_transform(const Dataset& test, OodScenario scenario, const Dataset& std_source) {
  if (test.size() == 0) throw std::invalid_argument("ood_transform: empty test set");
  Dataset out = test;
  switch (scenario) {
    case OodScenario::kScale01:
      for (double& v : out.features.data()) v *= 0.1;
      break;
    case OodScenario::kScale2:
      for (double& v : out.features.data()) v *= 2.0;
      break;
    case OodScenario::kPlus3Std: {
      if (std_source.dim() != test.dim()) {
        throw std::invalid_argument("ood_transform: reference set has a different dimension");
      }
      const auto sd = feature_stddev(std_source);
      for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < out.dim(); ++j) out.features(i, j) += 3.0 * sd[j];
      }
      break;
    }
  }
  return out;
}

MetricSet metrics_from_predictions(std::span<const UnivariateT> predictive,
                                   std::span<const double> variances,
                                   std::span<const double> targets) {
  if (predictive.size() != targets.size() || variances.size() != targets.size()) {
    throw std::invalid_argument("metrics: prediction and target counts differ");
  }
  if (targets.empty()) throw std::invalid_argument("metrics: empty test set");
  MetricSet m;
  m.n = targets.size();
  double sq = 0.0;
  double nll = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& p = predictive[i];
    const double r = targets[i] - p.mu;
    sq += r * r;
    nll -= specfn::t_logpdf(targets[i], p.mu, p.tau2, p.nu);
    var += variances[i];
  }
  const double n = static_cast<double>(m.n);
  m.rmse = std::sqrt(sq / n);
  m.nll = nll / n;
  m.mean_predictive_variance = var / n;
  return m;
}

MetricSet evaluate(std::span<const LayerState> network, const Dataset& test, double noise_var) {
  std::vector<UnivariateT> pred;
  std::vector<double> var;
  pred.reserve(test.size());
  var.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    ForwardResult r = forward_pass(network, test.row(i), noise_var);
    pred.push_back(r.predictive);
    var.push_back(r.predictive_variance);
  }
  return metrics_from_predictions(pred, var, test.targets);
}

OodReport ood_relative_errors(const MetricSet& in_distribution,
                              const std::array<MetricSet, 3>& scenarios) {
  OodReport report;
  report.in_distribution = in_distribution;
  report.scenarios = scenarios;
  auto delta = [&](auto metric) -> std::optional<double> {
    const double base = metric(in_distribution);
    if (base == 0.0 || !std::isfinite(base)) return std::nullopt;
    double sum = 0.0;
    for (const auto& s : scenarios) sum += std::abs(metric(s) - base) / std::abs(base);
    return sum / 3.0 * 100.0;
  };
  report.delta_nll = delta([](const MetricSet& m) { return m.nll; });
  report.delta_rmse = delta([](const MetricSet& m) { return m.rmse; });
  return report;
}

}  // namespace habnn
