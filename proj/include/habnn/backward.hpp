#pragma once

#include <span>
#include <vector>

#include "habnn/forward.hpp"
#include "habnn/layer.hpp"
#include "habnn/tdist.hpp"

namespace habnn {

/// Moment-matched posterior of X1 after X2 has been updated.
struct PosteriorUpdate {
  std::vector<double> mu_post;
  std::vector<double> scale_post;
  double nu_post = 0.0;
};

/// Which denominator multiplies the conditional scale.
enum class ScaleDenominator {
  kScale,     ///< nu + d2: stored scale parameter, assuming nu_post = nu + d2
  kVariance,  ///< nu + d2 - 2: exact posterior covariance
};

struct UpdateOptions {
  ScaleDenominator denominator = ScaleDenominator::kScale;
  /// Dimension added to nu in the factor's denominator. Zero or negative
  /// selects the dimension of X2, which keeps the factor at 1 for an update
  /// that carries no information.
  double d2 = 0.0;
};

/// Degrees of freedom used to turn the ReLU scale of z into E[f(a)^2] in the
/// a <-> z cross term.
enum class CrossDof {
  kThisLayer,      ///< nu of z_{l+1}, the activation being conditioned on
  kPreviousLayer,  ///< nu of z_l, the layer input
};

struct BackwardOptions {
  UpdateOptions update;
  CrossDof cross_dof = CrossDof::kThisLayer;
  /// Use the Gaussian (KBNN/TAGI) update instead of the t update.
  bool gaussian_limit = false;
};

/// Cov(a, f(a)) = nu_z / (nu_z - 2) * tau2_z + mu_z^2 - mu_a * mu_z, the
/// first two terms being E[f(a)^2]. Returned in covariance units.
double cross_scale_a_z(double mu_a, double mu_z, double tau2_z, double nu_z);

/// Cross-covariance between X1 = (row-major W, z_in) and X2 = a for
/// a = W [z; 1] / sqrt(fan_out), with diagonal covariances.
///
/// Rows 0 .. fan_out * (fan_in + 1) - 1 hold the weights, coupling W_ij to
/// a_i only through C_W_ij * mu_z_j. When include_inputs is set, fan_in more
/// rows follow with C_z_j * mu_W_ij for every a_i. Values are covariances;
/// scale by (nu - 2) / nu before using them as a cross scale.
CrossScale cross_cov_wz_a(const LayerState& layer, std::span<const double> z_in_mu,
                          std::span<const double> z_in_cov, bool include_inputs = true);

/// Student's t posterior update for X1 given the updated X2:
///   mu_post    = mu_1 + S12 S2^-1 (mu_2|D - mu_2)
///   scale_post = k * (S1 - S12 S2^-1 S21) + S12 S2^-1 S2|D S2^-1 S12^T
///   k          = (nu + sum_c ((mu_2|D - mu_2)^2 + S2|D) / S2) / (nu + d2 [- 2])
///   nu_post    = nu_1 + 1
/// Only diagonals are kept. nu is the degrees of freedom of the X2 prior.
/// X2 coordinates with scale below 1e-300 contribute nothing.
PosteriorUpdate posterior_update(const DiagonalTVector& prior, const DiagonalTVector& x2_prior,
                                 const MomentPair& x2_post, const CrossScale& cross_scale,
                                 const UpdateOptions& options = {});

/// The Gaussian update shared by KBNN and TAGI: same mean, no data-dependent
/// factor on the conditional scale, degrees of freedom untouched.
PosteriorUpdate gaussian_limit_update(const DiagonalTVector& prior,
                                      const DiagonalTVector& x2_prior,
                                      const MomentPair& x2_post, const CrossScale& cross_scale);

/// One backward sweep from the output layer to the input layer, updating the
/// weights in place. The recursion starts from the observation y with zero
/// scale; the output coupling is a_L -> a_L + noise.
void backward_pass(std::span<LayerState> network, const ForwardTrace& trace, double y,
                   double noise_var, const BackwardOptions& options = {});

}  // namespace habnn
