// habnn command line: train, sweep, bench, oracle.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure,
// 4 oracle failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "habnn/data.hpp"
#include "habnn/experiment.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3, kOracle = 4 };

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw CLI::ValidationError(what, "bad list element '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

struct Flags {
  std::string data;
  long target_col = -1;
  bool header = false;
  std::string hidden = "50";
  double nu0 = 12.0;
  double scale0 = 0.01;
  double noise_var = 1.0;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::string normalize = "none";
  bool ood = false;
  std::string ood_std = "test";
  double train_frac = 0.9;
  std::string out;
  bool gaussian = false;
  std::string cross_dof = "this";
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.data, "CSV file (synthetic y = 2x + e when omitted)");
  cmd->add_option("--target-col", f.target_col, "zero-based target column (default: last)");
  cmd->add_flag("--header", f.header, "first CSV line is a header");
  cmd->add_option("--hidden", f.hidden, "hidden widths, comma separated")->capture_default_str();
  cmd->add_option("--nu0", f.nu0, "initial degrees of freedom")->capture_default_str();
  cmd->add_option("--scale0", f.scale0, "initial weight scale")->capture_default_str();
  cmd->add_option("--noise-var", f.noise_var, "observation noise variance")
      ->capture_default_str();
  cmd->add_option("--runs", f.runs, "independent runs")->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed; run k uses seed + k")->capture_default_str();
  cmd->add_option("--normalize", f.normalize, "feature normalization")
      ->check(CLI::IsMember({"none", "zscore"}))
      ->capture_default_str();
  cmd->add_flag("--ood", f.ood, "also evaluate the three shifted test sets");
  cmd->add_option("--ood-std", f.ood_std, "std source for the +3 std shift")
      ->check(CLI::IsMember({"test", "train"}))
      ->capture_default_str();
  cmd->add_option("--train-frac", f.train_frac, "training fraction")->capture_default_str();
  cmd->add_option("--out", f.out, "write the JSON report here");
  cmd->add_flag("--gaussian", f.gaussian, "use the Gaussian-limit update");
  cmd->add_option("--cross-dof", f.cross_dof, "dof in the a/z cross term")
      ->check(CLI::IsMember({"this", "previous"}))
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

habnn::RunSpec to_spec(const Flags& f) {
  habnn::RunSpec s;
  if (!f.data.empty()) s.data = f.data;
  s.csv.has_header = f.header;
  if (f.target_col >= 0) s.csv.target_column = static_cast<std::size_t>(f.target_col);
  s.hidden = parse_list<std::size_t>(f.hidden, "--hidden");
  s.nu0 = f.nu0;
  s.scale0 = f.scale0;
  s.noise_var = f.noise_var;
  s.runs = f.runs;
  s.seed = f.seed;
  s.normalize = habnn::parse_normalization(f.normalize);
  s.ood = f.ood;
  s.ood_std_from_train = f.ood_std == "train";
  s.train_frac = f.train_frac;
  s.backward.gaussian_limit = f.gaussian;
  s.backward.cross_dof =
      f.cross_dof == "this" ? habnn::CrossDof::kThisLayer : habnn::CrossDof::kPreviousLayer;
  s.threads = f.threads;
  s.validate();
  return s;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw habnn::DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HABNN: gradient-free Bayesian neural network regression"};
  app.require_subcommand(1);
  Flags flags;

  auto* train = app.add_subcommand("train", "train and evaluate over independent runs");
  add_common(train, flags);

  auto* sweep = app.add_subcommand("sweep", "train/eval across one hyperparameter axis");
  add_common(sweep, flags);
  std::string axis_name = "scale0";
  std::string values_text;
  sweep->add_option("--axis", axis_name, "scale0, nu0 or depth")
      ->check(CLI::IsMember({"scale0", "nu0", "depth"}))
      ->capture_default_str();
  sweep->add_option("--values", values_text, "comma list (default: the standard grid)");

  auto* bench = app.add_subcommand("bench", "per-sample training time per hidden width");
  add_common(bench, flags);
  std::string widths_text = "50,100";
  std::size_t bench_samples = 200;
  std::size_t bench_dim = 8;
  bench->add_option("--widths", widths_text, "hidden widths, at least two")
      ->capture_default_str();
  bench->add_option("--samples", bench_samples, "timed samples per width")->capture_default_str();
  bench->add_option("--input-dim", bench_dim, "input dimension")->capture_default_str();

  auto* oracle_cmd = app.add_subcommand("oracle", "Monte Carlo checks of the analytic moments");
  std::string suite = "all";
  habnn::oracle::OracleOptions oracle_opts;
  oracle_cmd->add_option("--suite", suite, "all, relu, posterior, linear or cross")
      ->check(CLI::IsMember({"all", "relu", "posterior", "linear", "cross"}))
      ->capture_default_str();
  oracle_cmd->add_option("--samples", oracle_opts.samples, "draws per check")
      ->capture_default_str();
  oracle_cmd->add_option("--seed", oracle_opts.seed, "sampler seed")->capture_default_str();
  oracle_cmd->add_option("--k", oracle_opts.k, "standard errors allowed")->capture_default_str();
  oracle_cmd->add_option("--perturb", oracle_opts.analytic_perturbation,
                         "add this to every analytic value (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*oracle_cmd) {
      const auto reports = habnn::cmd_oracle(habnn::parse_oracle_suite(suite), oracle_opts);
      std::size_t failed = 0;
      for (const auto& r : reports) {
        std::cout << r.to_line() << "\n";
        failed += r.pass ? 0 : 1;
      }
      std::cout << reports.size() - failed << "/" << reports.size() << " oracle checks passed\n";
      return failed ? kOracle : kOk;
    }

    const habnn::RunSpec spec = to_spec(flags);
    if (*train) {
      const auto report = habnn::cmd_train_eval(spec);
      write_json(flags.out, report.to_json());
      std::cout << report.summary();
      return report.failures ? kNumeric : kOk;
    }
    if (*sweep) {
      const auto axis = habnn::parse_sweep_axis(axis_name);
      const auto values = values_text.empty() ? habnn::default_sweep_values(axis)
                                              : parse_list<double>(values_text, "--values");
      const auto report = habnn::cmd_sweep(spec, axis, values);
      write_json(flags.out, report.to_json());
      std::cout << report.table();
      return report.failures() ? kNumeric : kOk;
    }
    if (*bench) {
      const auto report = habnn::cmd_bench(spec, parse_list<std::size_t>(widths_text, "--widths"),
                                           bench_samples, bench_dim);
      write_json(flags.out, report.to_json());
      std::cout << report.table();
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const habnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
