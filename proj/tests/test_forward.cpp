#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "habnn/forward.hpp"
#include "habnn/specfn.hpp"

using namespace habnn;
using doctest::Approx;

namespace {

LayerState scalar_layer(std::size_t fan_out, double w, double w_var, double nu) {
  LayerState layer(1, fan_out, nu, 1.0);
  for (std::size_t i = 0; i < fan_out; ++i) {
    layer.w_mu(i, 0) = w;
    layer.w_tau2(i, 0) = w_var > 0.0 ? scale_from_variance(w_var, nu) : 0.0;
    layer.w_mu(i, 1) = 0.0;
    layer.w_tau2(i, 1) = 0.0;
  }
  return layer;
}

double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Literal printed forms, evaluated with std::lgamma and the non-regularized
// incomplete beta.
double literal_relu_mean(double mu, double tau2, double nu) {
  const double nt = nu * tau2;
  const double g = std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu));
  return g / std::sqrt(std::numbers::pi * nt) * nt / (nu - 1.0) *
             std::pow(1.0 + mu * mu / nt, 0.5 * (1.0 - nu)) +
         mu * (1.0 - specfn::t_cdf(0.0, mu, tau2, nu));
}

double literal_relu_variance(double mu, double tau2, double nu) {
  const double nt = nu * tau2;
  const double mz = literal_relu_mean(mu, tau2, nu);
  const double i = mu >= 0.0 ? 1.0 : -1.0;
  const double g = std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu));
  const double bz = specfn::incomplete_beta(mu * mu / (nt + mu * mu), 1.5, 0.5 * (nu - 2.0));
  return nt / (2.0 * (nu - 2.0)) + mu * mu * specfn::t_cdf(mu, 0.0, tau2, nu) +
         i * nt / (2.0 * std::sqrt(std::numbers::pi)) * g * bz +
         2.0 * mu * (mz - mu * (1.0 - specfn::t_cdf(0.0, mu, tau2, nu))) - mz * mz;
}

}  // namespace

TEST_CASE("linear_moments examples") {
  const std::vector<double> three{3.0};
  SUBCASE("deterministic") {
    const auto m = linear_moments(scalar_layer(1, 2.0, 0.0, 12.0), three, std::vector<double>{0.0});
    CHECK(m.mu[0] == Approx(6.0));
    CHECK(m.var[0] == 0.0);
  }
  SUBCASE("fan-out scaling") {
    const auto m = linear_moments(scalar_layer(4, 2.0, 0.0, 12.0), three, std::vector<double>{0.0});
    CHECK(m.mu.size() == 4);
    CHECK(m.mu[0] == Approx(3.0));
  }
  SUBCASE("product variance") {
    const auto m =
        linear_moments(scalar_layer(1, 2.0, 0.25, 12.0), three, std::vector<double>{0.5});
    CHECK(m.var[0] == Approx(4.375).epsilon(1e-12));
    CHECK(m.tau2[0] == Approx(4.375 * 10.0 / 12.0).epsilon(1e-12));
    CHECK(m.nu == 12.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(linear_moments(scalar_layer(1, 2.0, 0.0, 12.0), std::vector<double>{1.0, 2.0},
                                   std::vector<double>{0.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        linear_moments(scalar_layer(1, 2.0, 0.25, 2.0), three, std::vector<double>{0.0}),
        std::domain_error);
  }
}

TEST_CASE("relu_mean examples") {
  CHECK(relu_mean(0.0, 1.0, 4.0) == Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(relu_mean(0.0, 1.0, 1e6) - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-4);
  CHECK(std::abs(relu_mean(50.0, 1.0, 12.0) - 50.0) < 1e-6);
  CHECK_THROWS_AS(relu_mean(0.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(relu_mean(0.0, 0.0, 4.0), std::domain_error);
}

TEST_CASE("relu_variance examples") {
  CHECK(relu_variance(0.0, 1.0, 4.0, relu_mean(0.0, 1.0, 4.0)) == Approx(0.75).epsilon(1e-13));
  const double mg = relu_mean(0.0, 1.0, 1e6);
  CHECK(std::abs(relu_variance(0.0, 1.0, 1e6, mg) - (0.5 - 0.5 / std::numbers::pi)) < 1e-3);
  CHECK(std::abs(relu_variance(-50.0, 1.0, 12.0, relu_mean(-50.0, 1.0, 12.0))) < 1e-6);
  CHECK_THROWS_AS(relu_variance(0.0, 1.0, 2.0, 0.5), std::domain_error);
}

TEST_CASE("ReLU moments equal the literal closed forms") {
  for (double mu : {-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0}) {
    for (double tau2 : {0.25, 1.0, 4.0}) {
      for (double nu : {3.0, 4.0, 12.0, 50.0}) {
        const double m = relu_mean(mu, tau2, nu);
        CHECK(m == Approx(literal_relu_mean(mu, tau2, nu)).epsilon(1e-10));
        const double lit = literal_relu_variance(mu, tau2, nu);
        CHECK(std::abs(relu_variance(mu, tau2, nu, m) - lit) <= 1e-10 * std::max(1.0, lit));
      }
    }
  }
}

TEST_CASE("ReLU moments: positivity and tail limits") {
  for (double tau2 : {0.25, 1.0, 4.0}) {
    for (double nu : {3.0, 4.0, 12.0, 50.0}) {
      const double s = std::sqrt(tau2);
      // E[max(a, 0)] at mu = -50 sd, tau2 = 1, by quadrature (mpmath, 30 digits).
      // For nu = 3 and 4 the tail is heavy enough that it exceeds 1e-6.
      double tail = 0.0;
      if (nu == 3.0) tail = 2.20372911419409655e-4;
      if (nu == 4.0) tail = 7.98721917137094322e-6;
      CHECK(std::abs(relu_mean(50.0 * s, tau2, nu) - (50.0 + tail) * s) <= 1e-6 * s);
      CHECK(std::abs(relu_mean(-50.0 * s, tau2, nu) - tail * s) <= 1e-6 * s);
      if (tail > 0.0) CHECK(relu_mean(-50.0 * s, tau2, nu) == Approx(tail * s).epsilon(1e-9));
      for (double mu = -10.0; mu <= 10.0; mu += 0.5) {
        const double m = relu_mean(mu, tau2, nu);
        CHECK(m >= 0.0);
        CHECK(relu_variance(mu, tau2, nu, m) >= 0.0);
      }
    }
  }
}

TEST_CASE("ReLU moments reach the Gaussian closed forms at nu = 1e6") {
  for (double mu : {-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0}) {
    for (double tau2 : {0.25, 1.0, 4.0}) {
      const double s = std::sqrt(tau2);
      const double r = mu / s;
      const double g_mean = mu * gauss_cdf(r) + s * gauss_pdf(r);
      const double g_second = (mu * mu + tau2) * gauss_cdf(r) + mu * s * gauss_pdf(r);
      const double g_var = g_second - g_mean * g_mean;
      const double m = relu_mean(mu, tau2, 1e6);
      CHECK(std::abs(m - g_mean) <= 1e-3 * g_mean);
      CHECK(std::abs(relu_variance(mu, tau2, 1e6, m) - g_var) <= 1e-3 * g_var);
    }
  }
}

TEST_CASE("ReLU moments are positively homogeneous") {
  for (double mu : {-2.0, -0.3, 0.0, 0.7, 2.5}) {
    for (double nu : {3.0, 12.0}) {
      for (double c : {0.1, 3.0, 17.0}) {
        const double m1 = relu_mean(mu, 1.3, nu);
        const double mc = relu_mean(c * mu, c * c * 1.3, nu);
        CHECK(std::abs(mc - c * m1) <= 1e-9 * std::max(1.0, c * m1));
        const double v1 = relu_variance(mu, 1.3, nu, m1);
        const double vc = relu_variance(c * mu, c * c * 1.3, nu, mc);
        CHECK(std::abs(vc - c * c * v1) <= 1e-9 * std::max(1.0, c * c * v1));
      }
    }
  }
}

TEST_CASE("forward_pass examples") {
  SUBCASE("zero weights leave only the noise") {
    std::vector<LayerState> net{LayerState(2, 3, 12.0, 1.0), LayerState(3, 1, 12.0, 1.0)};
    for (auto& l : net) {
      for (double& v : l.w_tau2.data()) v = 0.0;
    }
    const auto r = forward_pass(net, std::vector<double>{0.3, -1.0}, 0.7);
    CHECK(r.predictive.mu == 0.0);
    CHECK(r.predictive_variance == Approx(0.7));
    CHECK(variance_of(r.predictive) == Approx(0.7));
  }
  SUBCASE("single linear layer") {
    std::vector<LayerState> net{scalar_layer(1, 1.5, 0.0, 12.0)};
    const auto r = forward_pass(net, std::vector<double>{2.0}, 0.1);
    CHECK(r.predictive.mu == Approx(3.0));
    CHECK(r.trace.depth() == 1);
  }
  SUBCASE("errors") {
    std::vector<LayerState> net{LayerState(2, 3, 12.0, 1.0), LayerState(3, 1, 12.0, 1.0)};
    CHECK_THROWS_AS(forward_pass(net, std::vector<double>{1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(forward_pass({}, std::vector<double>{1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(forward_pass(net, std::vector<double>{1.0, 2.0}, -1.0), std::domain_error);
    std::vector<LayerState> wide{LayerState(2, 3, 12.0, 1.0)};
    CHECK_THROWS_AS(forward_pass(wide, std::vector<double>{1.0, 2.0}, 0.1), std::invalid_argument);
  }
}

TEST_CASE("forward_pass carries the weight dof through every layer") {
  std::vector<LayerState> net{LayerState(2, 4, 15.0, 0.1), LayerState(4, 3, 15.0, 0.1),
                              LayerState(3, 1, 15.0, 0.1)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& l : net) {
    for (double& v : l.w_mu.data()) v = n(rng);
  }
  const auto r = forward_pass(net, std::vector<double>{0.5, -0.5}, 0.2);
  for (std::size_t l = 0; l < net.size(); ++l) {
    CHECK(r.trace.pre[l].nu == net[l].nu_w);
    CHECK(r.trace.post[l].nu == net[l].nu_w);
    for (double m : r.trace.post[l].mu) CHECK(std::isfinite(m));
  }
  CHECK(r.predictive.nu == 15.0);
  CHECK(r.predictive_variance >= 0.2);
}

TEST_CASE("forward_pass mean matches sampled 2-2-1 networks") {
  const double nu = 12.0;
  std::vector<LayerState> net{LayerState(2, 2, nu, 0.01), LayerState(2, 1, nu, 0.01)};
  const double w0[] = {0.8, -0.4, 0.3, -0.6, 1.1, 0.2};
  const double w1[] = {1.2, -0.7, 0.5};
  std::copy(std::begin(w0), std::end(w0), net[0].w_mu.data().begin());
  std::copy(std::begin(w1), std::end(w1), net[1].w_mu.data().begin());
  const std::vector<double> x{1.0, 0.5};
  const auto r = forward_pass(net, x, 0.0 + 1e-12);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> chi(0.5 * nu, 2.0 / nu);
  auto draw = [&](double mu, double tau2) { return mu + std::sqrt(tau2 / chi(rng)) * normal(rng); };
  const int n = 100'000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    double z[2];
    for (int i = 0; i < 2; ++i) {
      double a = draw(net[0].w_mu(i, 2), net[0].w_tau2(i, 2));
      for (int j = 0; j < 2; ++j) a += draw(net[0].w_mu(i, j), net[0].w_tau2(i, j)) * x[j];
      z[i] = std::max(a / std::sqrt(2.0), 0.0);
    }
    double y = draw(net[1].w_mu(0, 2), net[1].w_tau2(0, 2));
    for (int j = 0; j < 2; ++j) y += draw(net[1].w_mu(0, j), net[1].w_tau2(0, j)) * z[j];
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(r.predictive.mu - mean) <= 3.0 * se);
}
