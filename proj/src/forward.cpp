#include "habnn/forward.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "habnn/specfn.hpp"

namespace habnn {
namespace {

void check_relu_args(double tau2, double nu, double min_nu) {
  if (!(tau2 > 0.0)) {
    throw std::domain_error("ReLU moments need a positive scale, got " + std::to_string(tau2));
  }
  if (!(nu > min_nu)) {
    throw std::domain_error("ReLU moments need nu > " + std::to_string(min_nu) + ", got " +
                            std::to_string(nu));
  }
}

// P(a > 0) for a ~ t(mu, tau2, nu), i.e. 1 - F(0 | mu, tau2, nu) = F(mu | 0, tau2, nu).
double positive_mass(double mu, double tau2, double nu) {
  return specfn::t_cdf(mu, 0.0, tau2, nu);
}

}  // namespace

PreActivationMoments linear_moments(const LayerState& layer, std::span<const double> z_in_mu,
                                    std::span<const double> z_in_cov) {
  if (z_in_mu.size() != layer.fan_in || z_in_cov.size() != layer.fan_in) {
    throw std::invalid_argument("linear_moments: input has " + std::to_string(z_in_mu.size()) +
                                " entries, layer expects " + std::to_string(layer.fan_in));
  }
  if (layer.w_mu.rows() != layer.fan_out || layer.w_mu.cols() != layer.fan_in + 1 ||
      layer.w_tau2.rows() != layer.fan_out || layer.w_tau2.cols() != layer.fan_in + 1) {
    throw std::invalid_argument("linear_moments: weight shape does not match layer dimensions");
  }
  const double nu = layer.nu_w;
  const double cov_per_scale = variance_from_scale(1.0, nu);
  const double m = static_cast<double>(layer.fan_out);
  const double inv_sqrt_m = 1.0 / std::sqrt(m);

  PreActivationMoments out;
  out.nu = nu;
  out.mu.resize(layer.fan_out);
  out.var.resize(layer.fan_out);
  out.tau2.resize(layer.fan_out);
  for (std::size_t i = 0; i < layer.fan_out; ++i) {
    const auto w_mu = layer.w_mu.row(i);
    const auto w_tau2 = layer.w_tau2.row(i);
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t j = 0; j < layer.fan_in; ++j) {
      const double c_w = cov_per_scale * w_tau2[j];
      const double c_z = z_in_cov[j];
      mean += w_mu[j] * z_in_mu[j];
      var += w_mu[j] * w_mu[j] * c_z + z_in_mu[j] * z_in_mu[j] * c_w + c_w * c_z;
    }
    // bias: input fixed at 1
    mean += w_mu[layer.fan_in];
    var += cov_per_scale * w_tau2[layer.fan_in];

    out.mu[i] = mean * inv_sqrt_m;
    out.var[i] = var / m;
    out.tau2[i] = scale_from_variance(out.var[i], nu);
  }
  return out;
}

double relu_mean(double mu, double tau2, double nu) {
  check_relu_args(tau2, nu, 1.0);
  const double nt = nu * tau2;
  const double log_density_norm =
      specfn::log_gamma_ratio(0.5 * nu, 0.5) - 0.5 * std::log(std::numbers::pi * nt);
  const double tail_term = std::exp(log_density_norm + std::log(nt / (nu - 1.0)) +
                                    0.5 * (1.0 - nu) * std::log1p(mu * mu / nt));
  const double mean = tail_term + mu * positive_mass(mu, tau2, nu);
  return mean > 0.0 ? mean : 0.0;
}

double relu_second_moment(double mu, double tau2, double nu, double relu_mu) {
  check_relu_args(tau2, nu, 2.0);
  const double nt = nu * tau2;
  const double half_second_moment = nt / (2.0 * (nu - 2.0));

  // The incomplete-beta term is
  //   i * nt / (2 sqrt(pi)) * Gamma((nu+1)/2) / Gamma(nu/2) * B_z(3/2, (nu-2)/2)
  // and its prefactor times the complete B(3/2, (nu-2)/2) equals
  // half_second_moment, so the term is i * half_second_moment * I_z. For
  // mu < 0 the sum 1 - I_z is taken from the complementary argument.
  const double denom = nt + mu * mu;
  double partial;
  if (mu >= 0.0) {
    partial = 1.0 + specfn::regularized_incomplete_beta(mu * mu / denom, nt / denom, 1.5,
                                                        0.5 * (nu - 2.0));
  } else {
    partial = specfn::regularized_incomplete_beta(nt / denom, mu * mu / denom, 0.5 * (nu - 2.0),
                                                  1.5);
  }
  const double p_pos = positive_mass(mu, tau2, nu);
  const double second = half_second_moment * partial + 2.0 * mu * (relu_mu - mu * p_pos) +
                        mu * mu * p_pos;
  return second > 0.0 ? second : 0.0;
}

double relu_variance(double mu, double tau2, double nu, double relu_mu) {
  const double var = relu_second_moment(mu, tau2, nu, relu_mu) - relu_mu * relu_mu;
  return var > 0.0 ? var : 0.0;
}

ForwardResult forward_pass(std::span<const LayerState> network, std::span<const double> x,
                           double noise_var) {
  if (network.empty()) throw std::invalid_argument("forward_pass: empty network");
  if (x.size() != network.front().fan_in) {
    throw std::invalid_argument("forward_pass: input dimension " + std::to_string(x.size()) +
                                " does not match fan-in " +
                                std::to_string(network.front().fan_in));
  }
  if (!(noise_var >= 0.0)) throw std::domain_error("forward_pass: noise variance must be >= 0");

  ForwardResult result;
  ForwardTrace& trace = result.trace;
  trace.input.assign(x.begin(), x.end());
  trace.pre.reserve(network.size());
  trace.post.reserve(network.size());

  std::vector<double> z_mu(x.begin(), x.end());
  std::vector<double> z_cov(x.size(), 0.0);
  for (std::size_t l = 0; l < network.size(); ++l) {
    const LayerState& layer = network[l];
    if (l > 0 && layer.fan_in != network[l - 1].fan_out) {
      throw std::invalid_argument("forward_pass: layer " + std::to_string(l) +
                                  " fan-in does not match previous fan-out");
    }
    PreActivationMoments pre = linear_moments(layer, z_mu, z_cov);
    PostActivationMoments post;
    post.nu = pre.nu;
    if (l + 1 == network.size()) {
      post.mu = pre.mu;
      post.var = pre.var;
      post.tau2 = pre.tau2;
    } else {
      const std::size_t n = pre.mu.size();
      post.mu.resize(n);
      post.var.resize(n);
      post.tau2.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (pre.tau2[i] > 0.0) {
          post.mu[i] = relu_mean(pre.mu[i], pre.tau2[i], pre.nu);
          post.var[i] = relu_variance(pre.mu[i], pre.tau2[i], pre.nu, post.mu[i]);
        } else {
          post.mu[i] = pre.mu[i] > 0.0 ? pre.mu[i] : 0.0;
          post.var[i] = 0.0;
        }
        post.tau2[i] = scale_from_variance(post.var[i], post.nu);
      }
    }
    z_mu = post.mu;
    z_cov = post.var;
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(std::move(post));
  }

  const PostActivationMoments& out = trace.post.back();
  if (out.mu.size() != 1) {
    throw std::invalid_argument("forward_pass: the output layer must have exactly one neuron");
  }
  result.predictive_variance = out.var[0] + noise_var;
  result.predictive = UnivariateT(out.mu[0], scale_from_variance(result.predictive_variance, out.nu),
                                  out.nu);
  return result;
}

}  // namespace habnn
