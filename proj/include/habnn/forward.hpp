#pragma once

#include <span>
#include <vector>

#include "habnn/layer.hpp"
#include "habnn/tdist.hpp"

namespace habnn {

/// Moments of a layer's pre-activations a.
struct PreActivationMoments {
  std::vector<double> mu;
  std::vector<double> var;   // covariance diagonal
  std::vector<double> tau2;  // scale diagonal, (nu - 2) / nu * var
  double nu = 0.0;
};

/// Moments of a layer's post-activations z = f(a). For the output layer,
/// which has no activation, these equal the pre-activation moments.
struct PostActivationMoments {
  std::vector<double> mu;
  std::vector<double> var;
  std::vector<double> tau2;
  double nu = 0.0;
};

/// Everything the backward pass needs from one forward pass.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<PreActivationMoments> pre;
  std::vector<PostActivationMoments> post;

  std::size_t depth() const { return pre.size(); }
};

struct ForwardResult {
  UnivariateT predictive;
  double predictive_variance = 0.0;  // includes the observation noise
  ForwardTrace trace;
};

/// Moments of a = W [z; 1] / sqrt(fan_out) for independent mean-field W and z.
///
/// z_in_cov is the covariance diagonal of the incoming activations; the
/// constant bias input is appended internally with zero covariance.
PreActivationMoments linear_moments(const LayerState& layer, std::span<const double> z_in_mu,
                                    std::span<const double> z_in_cov);

/// E[max(a, 0)] for a ~ t(mu, tau2, nu), nu > 1.
double relu_mean(double mu, double tau2, double nu);

/// Var[max(a, 0)] for a ~ t(mu, tau2, nu), nu > 2. relu_mu must be
/// relu_mean(mu, tau2, nu). Clamped at zero against rounding.
double relu_variance(double mu, double tau2, double nu, double relu_mu);

/// Second raw moment E[max(a, 0)^2].
double relu_second_moment(double mu, double tau2, double nu, double relu_mu);

/// Propagates a deterministic input through the network. Hidden layers use
/// ReLU, the last layer is linear, and noise_var is added to the output
/// variance before it is converted back to a scale.
ForwardResult forward_pass(std::span<const LayerState> network, std::span<const double> x,
                           double noise_var);

}  // namespace habnn
