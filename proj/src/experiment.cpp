#include "habnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "habnn/network.hpp"

namespace habnn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json metrics_json(const MetricSet& m) {
  return {{"rmse", m.rmse},
          {"nll", m.nll},
          {"n", m.n},
          {"mean_predictive_variance", m.mean_predictive_variance}};
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"count", a.count}, {"median", a.median}, {"std", a.stddev}};
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json spec_json(const RunSpec& s) {
  nlohmann::json j;
  j["data"] = s.data ? nlohmann::json(s.data->string()) : nlohmann::json(nullptr);
  j["target_col"] = s.csv.target_column ? nlohmann::json(*s.csv.target_column)
                                        : nlohmann::json(nullptr);
  j["header"] = s.csv.has_header;
  j["hidden"] = s.hidden;
  j["nu0"] = s.nu0;
  j["scale0"] = s.scale0;
  j["noise_var"] = s.noise_var;
  j["runs"] = s.runs;
  j["seed"] = s.seed;
  j["normalize"] = std::string(to_string(s.normalize));
  j["ood"] = s.ood;
  j["ood_std_source"] = s.ood_std_from_train ? "train" : "test";
  j["train_frac"] = s.train_frac;
  j["gaussian_limit"] = s.backward.gaussian_limit;
  j["cross_dof"] = s.backward.cross_dof == CrossDof::kThisLayer ? "this_layer" : "previous_layer";
  j["update_d2"] = s.backward.update.d2;
  j["update_denominator"] =
      s.backward.update.denominator == ScaleDenominator::kScale ? "scale" : "variance";
  return j;
}

RunResult run_once(const RunSpec& spec, const Dataset& data, std::size_t index) {
  RunResult r;
  r.index = index;
  r.seed = spec.seed + index;
  try {
    auto t0 = Clock::now();
    const SplitResult parts = split(data, spec.train_frac, r.seed);
    r.train_order = parts.train_indices;
    const NormalizedSplit norm = normalize_fit_apply(parts.train, parts.test, spec.normalize);
    r.times.split = seconds_since(t0);

    NetworkConfig config = NetworkConfig::with_hidden(data.dim(), spec.hidden);
    config.nu0 = spec.nu0;
    config.scale0 = spec.scale0;
    config.noise_var = spec.noise_var;
    config.seed = r.seed;
    t0 = Clock::now();
    TrainResult trained;
    try {
      trained = train_online(init_network(config), norm.train, spec.noise_var, spec.backward);
    } catch (const TrainingError& e) {
      r.failed_sample = e.sample_index();
      throw;
    }
    r.times.train = seconds_since(t0);

    t0 = Clock::now();
    r.metrics = evaluate(trained.network, norm.test, spec.noise_var);
    r.times.evaluate = seconds_since(t0);

    if (spec.ood) {
      t0 = Clock::now();
      std::array<MetricSet, 3> scenarios;
      for (std::size_t k = 0; k < kOodScenarios.size(); ++k) {
        const Dataset shifted =
            spec.ood_std_from_train ? ood_transform(norm.test, kOodScenarios[k], norm.train)
                                    : ood_transform(norm.test, kOodScenarios[k]);
        scenarios[k] = evaluate(trained.network, shifted, spec.noise_var);
      }
      r.ood = ood_relative_errors(r.metrics, scenarios);
      r.times.ood = seconds_since(t0);
    }
    if (!std::isfinite(r.metrics.rmse) || !std::isfinite(r.metrics.nll)) {
      throw std::runtime_error("non-finite test metrics");
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::vector<RunResult> run_all(const RunSpec& spec, const Dataset& data) {
  std::vector<RunResult> results(spec.runs);
  unsigned workers = spec.threads ? spec.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(spec.runs));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < spec.runs; i = next++) results[i] = run_once(spec, data, i);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return results;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

void RunSpec::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
  for (std::size_t w : hidden) {
    if (w == 0) throw std::invalid_argument("hidden widths must be positive");
  }
  if (!(nu0 > 2.0)) throw std::invalid_argument("nu0 must exceed 2");
  if (!(scale0 > 0.0)) throw std::invalid_argument("scale0 must be positive");
  if (!(noise_var >= 0.0)) throw std::invalid_argument("noise variance must be non-negative");
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  if (!data && synthetic_rows < 2) throw std::invalid_argument("synthetic data needs 2 rows");
}

Dataset synthetic_linear(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x_dist(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  Dataset d;
  d.features = Matrix(n, 1);
  d.targets.resize(n);
  d.feature_names = {"x"};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_dist(rng);
    d.features(i, 0) = x;
    d.targets[i] = 2.0 * x + noise(rng);
  }
  return d;
}

Aggregate aggregate(std::vector<double> values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) {
    a.median = std::nan("");
    a.stddev = std::nan("");
    return a;
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  a.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  if (n > 1) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    a.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return a;
}

ExperimentReport train_eval(const RunSpec& spec, const Dataset& data, const std::string& source) {
  spec.validate();
  const auto t0 = Clock::now();
  ExperimentReport report;
  report.spec = spec;
  report.data_source = source;
  report.rows = data.size();
  report.dim = data.dim();
  report.runs = run_all(spec, data);

  std::vector<double> rmse, nll, d_rmse, d_nll;
  for (const auto& r : report.runs) {
    if (!r.ok) {
      ++report.failures;
      continue;
    }
    rmse.push_back(r.metrics.rmse);
    nll.push_back(r.metrics.nll);
    if (r.ood) {
      if (r.ood->delta_rmse) d_rmse.push_back(*r.ood->delta_rmse);
      if (r.ood->delta_nll) d_nll.push_back(*r.ood->delta_nll);
    }
  }
  report.rmse = aggregate(rmse);
  report.nll = aggregate(nll);
  if (spec.ood) {
    report.delta_rmse = aggregate(d_rmse);
    report.delta_nll = aggregate(d_nll);
  }
  report.total_seconds = seconds_since(t0);
  return report;
}

ExperimentReport cmd_train_eval(const RunSpec& spec) {
  spec.validate();
  const auto t0 = Clock::now();
  Dataset data;
  std::string source;
  if (spec.data) {
    data = load_csv(*spec.data, spec.csv);
    source = spec.data->string();
  } else {
    data = synthetic_linear(spec.synthetic_rows, spec.seed);
    source = "synthetic_linear";
  }
  const double load = seconds_since(t0);
  ExperimentReport report = train_eval(spec, data, source);
  report.load_seconds = load;
  return report;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["software_version"] = kSoftwareVersion;
  j["command"] = "train";
  j["config"] = spec_json(spec);
  j["dataset"] = {{"source", data_source}, {"rows", rows}, {"dim", dim}};
  nlohmann::json run_list = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json rj;
    rj["index"] = r.index;
    rj["seed"] = r.seed;
    rj["ok"] = r.ok;
    if (!r.ok) {
      rj["error"] = r.error;
      rj["failed_sample"] =
          r.failed_sample ? nlohmann::json(*r.failed_sample) : nlohmann::json(nullptr);
    } else {
      rj["metrics"] = metrics_json(r.metrics);
    }
    if (r.ood) {
      nlohmann::json scen = nlohmann::json::object();
      for (std::size_t k = 0; k < kOodScenarios.size(); ++k) {
        scen[std::string(to_string(kOodScenarios[k]))] = metrics_json(r.ood->scenarios[k]);
      }
      rj["ood"] = {{"scenarios", scen},
                   {"delta_rmse_percent", optional_json(r.ood->delta_rmse)},
                   {"delta_nll_percent", optional_json(r.ood->delta_nll)}};
    }
    rj["train_order"] = r.train_order;
    rj["timing_seconds"] = {{"split", r.times.split},
                            {"train", r.times.train},
                            {"evaluate", r.times.evaluate},
                            {"ood", r.times.ood}};
    run_list.push_back(std::move(rj));
  }
  j["runs"] = std::move(run_list);
  nlohmann::json agg = {{"rmse", aggregate_json(rmse)}, {"nll", aggregate_json(nll)}};
  if (delta_rmse) agg["delta_rmse_percent"] = aggregate_json(*delta_rmse);
  if (delta_nll) agg["delta_nll_percent"] = aggregate_json(*delta_nll);
  j["aggregate"] = std::move(agg);
  j["failures"] = failures;
  j["timing_seconds"] = {{"load", load_seconds}, {"total", total_seconds}};
  return j;
}

std::string ExperimentReport::summary() const {
  std::ostringstream os;
  os << "data: " << data_source << " (" << rows << " rows, " << dim << " features)\n";
  os << "hidden:";
  for (std::size_t w : spec.hidden) os << ' ' << w;
  os << "  nu0: " << spec.nu0 << "  scale0: " << spec.scale0 << "  noise_var: " << spec.noise_var
     << "  normalize: " << to_string(spec.normalize) << "\n";
  os << "runs: " << runs.size() << "  failed: " << failures << "\n";
  os << "RMSE median " << fmt(rmse.median) << "  std " << fmt(rmse.stddev) << "\n";
  os << "NLL  median " << fmt(nll.median) << "  std " << fmt(nll.stddev) << "\n";
  if (delta_rmse && delta_nll) {
    os << "OOD delta RMSE median " << fmt(delta_rmse->median) << "%  delta NLL median "
       << fmt(delta_nll->median) << "%\n";
  }
  for (const auto& r : runs) {
    if (!r.ok) os << "run " << r.index << " failed: " << r.error << "\n";
  }
  return os.str();
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "scale0") return SweepAxis::kScale0;
  if (name == "nu0") return SweepAxis::kNu0;
  if (name == "depth") return SweepAxis::kDepth;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kScale0: return "scale0";
    case SweepAxis::kNu0: return "nu0";
    case SweepAxis::kDepth: return "depth";
  }
  return "unknown";
}

std::vector<double> default_sweep_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kScale0: return {0.01, 0.1, 1.0, 2.0, 5.0};
    case SweepAxis::kNu0: return {12.0, 20.0, 30.0, 50.0, 75.0};
    case SweepAxis::kDepth: return {1.0, 2.0, 3.0, 4.0};
  }
  return {};
}

SweepReport cmd_sweep(const RunSpec& spec, SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  spec.validate();
  Dataset data;
  std::string source;
  if (spec.data) {
    data = load_csv(*spec.data, spec.csv);
    source = spec.data->string();
  } else {
    data = synthetic_linear(spec.synthetic_rows, spec.seed);
    source = "synthetic_linear";
  }
  SweepReport out;
  out.axis = axis;
  out.values = values;
  for (double v : values) {
    RunSpec s = spec;
    switch (axis) {
      case SweepAxis::kScale0: s.scale0 = v; break;
      case SweepAxis::kNu0: s.nu0 = v; break;
      case SweepAxis::kDepth: {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw std::invalid_argument("depth values must be positive integers");
        }
        s.hidden.assign(static_cast<std::size_t>(v), spec.hidden.front());
        break;
      }
    }
    out.reports.push_back(train_eval(s, data, source));
  }
  return out;
}

std::size_t SweepReport::failures() const {
  std::size_t n = 0;
  for (const auto& r : reports) n += r.failures;
  return n;
}

nlohmann::json SweepReport::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["software_version"] = kSoftwareVersion;
  j["command"] = "sweep";
  j["axis"] = std::string(to_string(axis));
  j["values"] = values;
  nlohmann::json table = nlohmann::json::array();
  nlohmann::json reps = nlohmann::json::array();
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    table.push_back({{"value", values[k]},
                     {"rmse", aggregate_json(r.rmse)},
                     {"nll", aggregate_json(r.nll)},
                     {"failures", r.failures}});
    reps.push_back(r.to_json());
  }
  j["table"] = std::move(table);
  j["reports"] = std::move(reps);
  j["failures"] = failures();
  return j;
}

std::string SweepReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(10) << to_string(axis) << std::setw(14) << "rmse_median"
     << std::setw(12) << "rmse_std" << std::setw(14) << "nll_median" << std::setw(12) << "nll_std"
     << "failures\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    os << std::left << std::setw(10) << fmt(values[k]) << std::setw(14) << fmt(r.rmse.median)
       << std::setw(12) << fmt(r.rmse.stddev) << std::setw(14) << fmt(r.nll.median)
       << std::setw(12) << fmt(r.nll.stddev) << r.failures << "\n";
  }
  return os.str();
}

BenchReport cmd_bench(const RunSpec& spec, const std::vector<std::size_t>& widths,
                      std::size_t samples, std::size_t input_dim) {
  if (widths.size() < 2) throw std::invalid_argument("bench needs at least two widths");
  if (samples == 0 || input_dim == 0) throw std::invalid_argument("bench: empty workload");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("bench: widths must be positive");
  }
  BenchReport out;
  out.input_dim = input_dim;
  out.samples = samples;

  auto t0 = Clock::now();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(samples, input_dim);
  std::vector<double> y(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < input_dim; ++j) {
      x(i, j) = normal(rng);
      acc += x(i, j);
    }
    y[i] = acc / std::sqrt(static_cast<double>(input_dim)) + 0.1 * normal(rng);
  }
  out.data_seconds = seconds_since(t0);

  for (std::size_t width : widths) {
    NetworkConfig config = NetworkConfig::with_hidden(input_dim, std::vector<std::size_t>{width});
    config.nu0 = spec.nu0;
    config.scale0 = spec.scale0;
    config.seed = spec.seed;
    Network net = init_network(config);
    std::vector<double> per_sample(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto start = Clock::now();
      ForwardResult fwd = forward_pass(net, x.row(i), spec.noise_var);
      backward_pass(net, fwd.trace, y[i], spec.noise_var, spec.backward);
      per_sample[i] = seconds_since(start);
    }
    BenchRow row;
    row.width = width;
    for (const auto& l : net) row.weights += l.weight_count();
    row.median_seconds_per_sample = aggregate(per_sample).median;
    out.rows.push_back(row);
  }
  out.ratio = out.rows.back().median_seconds_per_sample / out.rows.front().median_seconds_per_sample;
  out.width_ratio =
      static_cast<double>(widths.back()) / static_cast<double>(widths.front());
  return out;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["software_version"] = kSoftwareVersion;
  j["command"] = "bench";
  j["input_dim"] = input_dim;
  j["samples"] = samples;
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"width", r.width},
                      {"weights", r.weights},
                      {"median_seconds_per_sample", r.median_seconds_per_sample}});
  }
  j["rows"] = std::move(rows_j);
  j["ratio"] = ratio;
  j["width_ratio"] = width_ratio;
  j["timing_seconds"] = {{"data", data_seconds}};
  return j;
}

std::string BenchReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(8) << "width" << std::setw(10) << "weights"
     << "median_us_per_sample\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << r.width << std::setw(10) << r.weights
       << fmt(r.median_seconds_per_sample * 1e6) << "\n";
  }
  os << "ratio " << fmt(ratio) << " for width ratio " << fmt(width_ratio) << "\n";
  return os.str();
}

OracleSuite parse_oracle_suite(std::string_view name) {
  if (name == "all") return OracleSuite::kAll;
  if (name == "relu") return OracleSuite::kRelu;
  if (name == "posterior") return OracleSuite::kPosterior;
  if (name == "linear") return OracleSuite::kLinear;
  if (name == "cross") return OracleSuite::kCross;
  throw std::invalid_argument("unknown oracle suite '" + std::string(name) + "'");
}

std::vector<std::pair<oracle::ScalarJoint, oracle::ScalarPosterior>> posterior_configs(
    std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  constexpr double kNus[] = {5.0, 12.0, 50.0};
  std::vector<std::pair<oracle::ScalarJoint, oracle::ScalarPosterior>> out;
  for (std::size_t k = 0; k < count; ++k) {
    oracle::ScalarJoint j;
    j.nu = kNus[k % 3];
    j.mu1 = u(-2.0, 2.0);
    j.scale1 = u(0.2, 3.0);
    j.mu2 = u(-2.0, 2.0);
    j.scale2 = u(0.2, 3.0);
    j.cross = u(-0.9, 0.9) * std::sqrt(j.scale1 * j.scale2);
    oracle::ScalarPosterior p;
    p.nu = j.nu + 1.0;
    p.mu = j.mu2 + u(-2.0, 2.0) * std::sqrt(j.scale2);
    p.variance = u(0.1, 1.0) * j.scale2;
    out.emplace_back(j, p);
  }
  return out;
}

std::vector<oracle::OracleReport> cmd_oracle(OracleSuite suite,
                                             const oracle::OracleOptions& options) {
  std::vector<oracle::OracleReport> out;
  const bool all = suite == OracleSuite::kAll;
  if (all || suite == OracleSuite::kRelu) {
    for (const auto& g : oracle::relu_grid()) {
      auto [mean, var] = oracle::relu_moments(g.mu, g.tau2, g.nu, options);
      out.push_back(std::move(mean));
      out.push_back(std::move(var));
    }
  }
  if (all || suite == OracleSuite::kPosterior) {
    for (const auto& [joint, post] : posterior_configs(25, options.seed)) {
      auto [mean, var] = oracle::posterior_moments(joint, post, options);
      out.push_back(std::move(mean));
      out.push_back(std::move(var));
    }
  }
  if (all || suite == OracleSuite::kLinear) {
    LayerState layer(2, 3, 12.0, 0.05);
    const double means[] = {0.5, -1.2, 0.3, 1.1, 0.4, -0.7, -0.2, 0.9, 0.6};
    std::copy(std::begin(means), std::end(means), layer.w_mu.data().begin());
    layer.w_tau2(0, 1) = 0.2;
    const std::vector<double> z_mu{0.8, 1.5};
    for (const auto& z_cov : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.3, 0.1}}) {
      auto [mean, var] = oracle::linear_moments(layer, z_mu, z_cov, 12.0, options);
      out.push_back(std::move(mean));
      out.push_back(std::move(var));
    }
  }
  if (all || suite == OracleSuite::kCross) {
    for (double mu : {-1.0, 0.0, 1.0}) {
      for (double nu : {12.0, 50.0}) out.push_back(oracle::cross_a_z(mu, 1.0, nu, options));
    }
  }
  return out;
}

}  // namespace habnn
