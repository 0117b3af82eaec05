#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "habnn/layer.hpp"

namespace habnn::oracle {

/// One analytic-versus-sampled comparison.
struct OracleReport {
  std::string quantity;  // e.g. "relu_mean"
  std::string formula;   // the closed form being validated
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  double k = 4.0;
  bool pass = false;

  std::string to_line() const;
};

struct OracleOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  double k = 4.0;
  /// Added to every analytic value; a nonzero value lets callers check that
  /// the comparison really fails.
  double analytic_perturbation = 0.0;
};

/// Sample summary used by every oracle.
struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
};

SampleMoments summarize(std::span<const double> samples);

/// ReLU of a ~ t(mu, tau2, nu): sampled mean and variance against
/// relu_mean / relu_variance.
std::pair<OracleReport, OracleReport> relu_moments(double mu, double tau2, double nu,
                                                   const OracleOptions& options = {});

/// Scalar jointly-t pair (X1, X2) with scales s1, s2, cross scale s12.
struct ScalarJoint {
  double mu1 = 0.0;
  double scale1 = 1.0;
  double mu2 = 0.0;
  double scale2 = 1.0;
  double cross = 0.0;
  double nu = 12.0;
};

/// Posterior of X2: location and covariance (not scale) after the update.
struct ScalarPosterior {
  double mu = 0.0;
  double variance = 1.0;
  double nu = 13.0;
};

/// Draws X2 from its posterior t, then X1 | X2 from the conditional t, and
/// compares with posterior_update in its covariance form.
std::pair<OracleReport, OracleReport> posterior_moments(const ScalarJoint& joint,
                                                        const ScalarPosterior& x2_post,
                                                        const OracleOptions& options = {});

/// Samples W (t with the layer's nu) and z (t with nu_z and the given
/// covariance, or fixed when the covariance is 0) and compares the moments
/// of the first output neuron of a = W [z; 1] / sqrt(fan_out) with
/// linear_moments.
std::pair<OracleReport, OracleReport> linear_moments(const LayerState& layer,
                                                     std::span<const double> z_mu,
                                                     std::span<const double> z_cov, double nu_z,
                                                     const OracleOptions& options = {});

/// Sampled E[a max(a, 0)] - E[a] E[max(a, 0)] against cross_scale_a_z.
OracleReport cross_a_z(double mu, double tau2, double nu, const OracleOptions& options = {});

/// The grid used for the ReLU moment sweep: mu in {-3,-1,-0.1,0,0.1,1,3},
/// tau2 in {0.25,1,4}, nu in {3,4,12,50}.
struct GridPoint {
  double mu;
  double tau2;
  double nu;
};
std::vector<GridPoint> relu_grid();

}  // namespace habnn::oracle
