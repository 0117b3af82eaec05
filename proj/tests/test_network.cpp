#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "habnn/experiment.hpp"
#include "habnn/network.hpp"

using namespace habnn;

namespace {

struct Fitted {
  Network net;
  SplitResult parts;
};

Fitted fit_synthetic(std::vector<std::size_t> hidden = {50}, std::uint64_t seed = 0) {
  const Dataset data = synthetic_linear(500, seed);
  SplitResult parts = split(data, 0.9, seed);
  NetworkConfig cfg = NetworkConfig::with_hidden(1, hidden);
  cfg.seed = seed;
  auto trained = train_online(init_network(cfg), parts.train, cfg.noise_var);
  return {std::move(trained.network), std::move(parts)};
}

// Closed-form least squares on one feature plus intercept.
double ols_test_rmse(const Dataset& train, const Dataset& test) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double x = train.row(i)[0], y = train.targets[i];
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double se = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double r = test.targets[i] - (icpt + slope * test.row(i)[0]);
    se += r * r;
  }
  return std::sqrt(se / static_cast<double>(test.size()));
}

}  // namespace

TEST_CASE("init_network") {
  NetworkConfig cfg = NetworkConfig::with_hidden(100, std::vector<std::size_t>{100});
  cfg.seed = 11;
  const Network a = init_network(cfg);
  const Network b = init_network(cfg);
  CHECK(a == b);
  REQUIRE(a.size() == 2);
  CHECK(a[0].fan_in == 100);
  CHECK(a[0].fan_out == 100);
  CHECK(a[1].fan_out == 1);

  SUBCASE("defaults") {
    const NetworkConfig d;
    CHECK(d.nu0 == 12.0);
    CHECK(d.scale0 == 0.01);
    for (const auto& layer : a) {
      CHECK(layer.nu_w == 12.0);
      for (double s : layer.w_tau2.data()) CHECK(s == 0.01);
    }
  }
  SUBCASE("standard normal means") {
    const auto& w = a[0].w_mu.data();
    const double n = static_cast<double>(w.size());
    double s = 0, s2 = 0;
    for (double v : w) { s += v; s2 += v * v; }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(n));
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 3.0 * std::sqrt(0.5 / n));
  }
  SUBCASE("other seeds differ") {
    cfg.seed = 12;
    CHECK(init_network(cfg) != a);
  }
}

TEST_CASE("NetworkConfig validation") {
  NetworkConfig cfg = NetworkConfig::with_hidden(1, std::vector<std::size_t>{5});
  CHECK_NOTHROW(cfg.validate());
  NetworkConfig bad = cfg;
  bad.nu0 = 2.0;
  CHECK_THROWS(init_network(bad));
  bad = cfg;
  bad.scale0 = 0.0;
  CHECK_THROWS(init_network(bad));
  bad = cfg;
  bad.layer_widths = {1};
  CHECK_THROWS(init_network(bad));
  bad = cfg;
  bad.layer_widths = {1, 0, 1};
  CHECK_THROWS(init_network(bad));
}

TEST_CASE("train_online bookkeeping") {
  NetworkConfig cfg = NetworkConfig::with_hidden(1, std::vector<std::size_t>{8});
  const Network start = init_network(cfg);

  SUBCASE("empty dataset") {
    Dataset empty;
    empty.features = Matrix(0, 1);
    const auto r = train_online(start, empty, 1.0);
    CHECK(r.network == start);
    CHECK(r.log.empty());
  }
  SUBCASE("nu counts samples") {
    const Dataset data = synthetic_linear(300, 3);
    const auto r = train_online(start, data, 1.0);
    for (const auto& layer : r.network) CHECK(layer.nu_w == cfg.nu0 + 300.0);
    REQUIRE(r.log.size() == 300);
    // log holds the law before the update it triggers
    const auto first = predict(start, data.row(0), 1.0);
    CHECK(r.log[0].predictive.mu == first.mu);
    CHECK(r.log[0].predictive.tau2 == first.tau2);
    CHECK(r.log[0].y == data.targets[0]);
  }
  SUBCASE("failures carry the sample index") {
    Dataset data = synthetic_linear(10, 3);
    data.targets[6] = NAN;
    try {
      train_online(start, data, 1.0);
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      CHECK(e.sample_index() == 6);
    }
  }
  SUBCASE("dimension mismatch") {
    Dataset data = synthetic_linear(5, 3);
    NetworkConfig two = NetworkConfig::with_hidden(2, std::vector<std::size_t>{4});
    CHECK_THROWS(train_online(init_network(two), data, 1.0));
  }
}

TEST_CASE("train_online recovers a linear map") {
  const auto [net, parts] = fit_synthetic();
  const MetricSet m = evaluate(net, parts.test, 1.0);
  const double ols = ols_test_rmse(parts.train, parts.test);
  CHECK(m.rmse < 0.5);
  CHECK(m.rmse < ols + 0.4);

  const auto at_one = predict(net, std::vector<double>{1.0}, 1.0);
  CHECK(std::abs(at_one.mu - 2.0) < 0.2);
}

TEST_CASE("predict is pure and its variance includes the noise") {
  const auto [net, parts] = fit_synthetic({10});
  const Network copy = net;
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0, 10.0}) {
    const std::vector<double> in{x};
    const auto a = predict(net, in, 0.3);
    const auto b = predict(net, in, 0.3);
    CHECK(a.mu == b.mu);
    CHECK(a.tau2 == b.tau2);
    CHECK(a.nu == b.nu);
    CHECK(predict_full(net, in, 0.3).predictive_variance >= 0.3);
  }
  CHECK(net == copy);
}

TEST_CASE("a second epoch stays stable") {
  const Dataset data = synthetic_linear(500, 0);
  const SplitResult parts = split(data, 0.9, 0);
  const NetworkConfig cfg = NetworkConfig::with_hidden(1, std::vector<std::size_t>{50});
  const auto one = train_online(init_network(cfg), parts.train, 1.0);
  const auto two = train_online(one.network, parts.train, 1.0);
  const double r1 = evaluate(one.network, parts.test, 1.0).rmse;
  const double r2 = evaluate(two.network, parts.test, 1.0).rmse;
  CHECK(std::isfinite(r2));
  CHECK(std::abs(r2 - r1) <= 0.5 * r1);
}

TEST_CASE("depth 1 to 4 trains without numeric failure") {
  for (std::size_t depth = 1; depth <= 4; ++depth) {
    CAPTURE(depth);
    const auto [net, parts] = fit_synthetic(std::vector<std::size_t>(depth, 50), depth);
    const MetricSet m = evaluate(net, parts.test, 1.0);
    CHECK(std::isfinite(m.rmse));
    CHECK(std::isfinite(m.nll));
  }
}
