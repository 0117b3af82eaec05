#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "habnn/tdist.hpp"

using namespace habnn;
using doctest::Approx;

TEST_CASE("variance_of examples") {
  CHECK(variance_of({0.0, 1.0, 4.0}) == Approx(2.0));
  CHECK(variance_of({5.0, 3.0, 3.0}) == Approx(9.0));
  CHECK_THROWS_AS(variance_of({0.0, 1.0, 2.0}), std::domain_error);
}

TEST_CASE("scale_from_variance examples") {
  CHECK(scale_from_variance(2.0, 4.0) == Approx(1.0));
  CHECK(scale_from_variance(0.0, 10.0) == 0.0);
  CHECK_THROWS_AS(scale_from_variance(1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(variance_from_scale(1.0, 1.5), std::domain_error);
}

TEST_CASE("scale and variance conversions are inverse") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double nu = 2.0 + std::exp(10.0 * u(rng) - 5.0);
    const double tau2 = std::exp(20.0 * u(rng) - 10.0);
    const UnivariateT t{0.0, tau2, nu};
    CHECK(std::abs(scale_from_variance(variance_of(t), nu) - tau2) <= 1e-12 * tau2);
    CHECK(std::abs(variance_from_scale(scale_from_variance(tau2, nu), nu) - tau2) <= 1e-12 * tau2);
  }
}

TEST_CASE("UnivariateT and DiagonalTVector validate") {
  CHECK_THROWS_AS(UnivariateT(0.0, 0.0, 3.0), std::domain_error);
  CHECK_THROWS_AS(UnivariateT(0.0, 1.0, 0.0), std::domain_error);
  CHECK_THROWS(UnivariateT(NAN, 1.0, 3.0));
  DiagonalTVector v{{0.0, 1.0}, {1.0}, 4.0};
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  v.tau2 = {1.0, -1.0};
  CHECK_THROWS_AS(v.validate(), std::domain_error);
  v.tau2 = {1.0, 2.0};
  CHECK_NOTHROW(v.validate());
}

TEST_CASE("sample moments and determinism") {
  std::mt19937_64 rng(123);
  const auto xs = sample({0.0, 1.0, 12.0}, rng, 1'000'000);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size() - 1;
  CHECK(std::abs(mean) <= 0.01);
  CHECK(std::abs(var - 1.2) <= 0.03 * 1.2);

  std::mt19937_64 a(9), b(9);
  CHECK(sample({1.0, 2.0, 5.0}, a, 100) == sample({1.0, 2.0, 5.0}, b, 100));
  CHECK_THROWS_AS(sample({0.0, 1.0, 3.0}, a, 0), std::invalid_argument);
}

TEST_CASE("large-nu samples are Gaussian by two-sample KS") {
  const std::size_t n = 100'000;
  std::mt19937_64 rng(77);
  auto t = sample({0.5, 2.0, 1e6}, rng, n);
  std::normal_distribution<double> normal(0.5, std::sqrt(variance_of({0.5, 2.0, 1e6})));
  std::vector<double> g(n);
  for (double& x : g) x = normal(rng);
  std::sort(t.begin(), t.end());
  std::sort(g.begin(), g.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < n) {
    if (t[i] <= g[j]) ++i; else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) - static_cast<double>(j)) / n);
  }
  CHECK(d < 0.01);
}

TEST_CASE("CrossScale storage") {
  CrossScale c(3, 2);
  c.push(0, 1, 2.0);
  c.push(2, 0, -1.0);
  c.push(2, 1, 4.0);
  CHECK(c.nonzeros() == 3);
  CHECK(c.row(1).empty());
  CHECK(c.to_dense() == std::vector<double>{0, 2, 0, 0, -1, 4});
  CHECK(c.scaled(0.5).to_dense() == std::vector<double>{0, 1, 0, 0, -0.5, 2});
  CHECK_THROWS(c.push(1, 0, 1.0));
  const auto d = CrossScale::diagonal(std::vector<double>{1.0, 3.0});
  CHECK(d.to_dense() == std::vector<double>{1, 0, 0, 3});
}

namespace {
ConditionalTParams scalar(double mu1, double s1, double mu2, double s2, double s12, double nu,
                          double x2) {
  return conditional_params(std::vector<double>{mu1}, std::vector<double>{s1},
                            std::vector<double>{mu2}, std::vector<double>{s2},
                            CrossScale::diagonal(std::vector<double>{s12}), nu,
                            std::vector<double>{x2});
}
}  // namespace

TEST_CASE("conditional_params examples") {
  SUBCASE("independence") {
    const auto p = conditional_params(
        std::vector<double>{1.0, -2.0}, std::vector<double>{2.0, 3.0}, std::vector<double>{0.0, 1.0},
        std::vector<double>{4.0, 1.0}, CrossScale(2, 2), 5.0, std::vector<double>{2.0, 3.0});
    CHECK(p.mu_cond == std::vector<double>{1.0, -2.0});
    CHECK(p.scale_cond_base == std::vector<double>{2.0, 3.0});
    CHECK(p.data_dependent_factor == Approx((5.0 + 1.0 + 4.0) / 7.0));
    CHECK(p.dof_cond == 7.0);
  }
  SUBCASE("x2 at its location") {
    const auto p = scalar(1.0, 2.0, 0.0, 4.0, 1.0, 5.0, 0.0);
    CHECK(p.data_dependent_factor == Approx(5.0 / 6.0));
    CHECK(p.data_dependent_factor < 1.0);
  }
  SUBCASE("scalar worked case") {
    const auto p = scalar(1.0, 2.0, 0.0, 4.0, 1.0, 5.0, 2.0);
    CHECK(p.mu_cond[0] == Approx(1.5));
    CHECK(p.scale_cond_base[0] == Approx(1.75));
    CHECK(p.data_dependent_factor == Approx(1.0));
    CHECK(p.dof_cond == 6.0);
    CHECK(p.scale_cond()[0] == Approx(1.75));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(scalar(0.0, 1.0, 0.0, 0.0, 0.0, 5.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(scalar(0.0, 1.0, 0.0, 1.0, 2.0, 5.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(conditional_params(std::vector<double>{0.0}, std::vector<double>{1.0},
                                       std::vector<double>{0.0}, std::vector<double>{1.0},
                                       CrossScale(1, 2), 5.0, std::vector<double>{0.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("conditional mean matches binned joint samples") {
  // (X1, X2) jointly t with nu = 5, scales 2 and 4, cross scale 1.
  const double nu = 5.0, s1 = 2.0, s2 = 4.0, s12 = 1.0, mu1 = 1.0, mu2 = 0.0;
  const double l21 = s12 / std::sqrt(s2);
  const double l11 = std::sqrt(s1 - l21 * l21);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> chi(0.5 * nu, 2.0 / nu);
  const double target = 2.0, half = 0.05;
  std::vector<double> hits;
  for (int k = 0; k < 4'000'000; ++k) {
    const double w = std::sqrt(1.0 / chi(rng));
    const double n2 = normal(rng), n1 = normal(rng);
    const double x2 = mu2 + w * std::sqrt(s2) * n2;
    if (std::abs(x2 - target) > half) continue;
    hits.push_back(mu1 + w * (l21 * n2 + l11 * n1));
  }
  double m = 0.0;
  for (double h : hits) m += h;
  m /= hits.size();
  double v = 0.0;
  for (double h : hits) v += (h - m) * (h - m);
  const double se = std::sqrt(v / (hits.size() - 1) / hits.size());
  const auto p = scalar(mu1, s1, mu2, s2, s12, nu, target);
  CHECK(hits.size() > 10'000);
  CHECK(std::abs(m - p.mu_cond[0]) <= 3.0 * se);
}
