#include "habnn/backward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace habnn {
namespace {

constexpr double kMinConditioningScale = 1e-300;

void check_update_inputs(const DiagonalTVector& prior, const DiagonalTVector& x2_prior,
                         const MomentPair& x2_post, const CrossScale& cross) {
  if (prior.mu.size() != prior.tau2.size()) {
    throw std::invalid_argument("posterior_update: X1 location/scale length mismatch");
  }
  const std::size_t d2 = x2_prior.size();
  if (x2_prior.tau2.size() != d2 || x2_post.mu.size() != d2 || x2_post.scale.size() != d2) {
    throw std::invalid_argument("posterior_update: X2 length mismatch");
  }
  if (cross.rows() != prior.size() || cross.cols() != d2) {
    throw std::invalid_argument("posterior_update: cross-scale is " +
                                std::to_string(cross.rows()) + "x" +
                                std::to_string(cross.cols()) + ", expected " +
                                std::to_string(prior.size()) + "x" + std::to_string(d2));
  }
  for (double s : x2_prior.tau2) {
    if (!(s >= 0.0)) throw std::domain_error("posterior_update: X2 scales must be positive");
  }
  for (double s : prior.tau2) {
    if (!(s >= 0.0)) throw std::domain_error("posterior_update: X1 scales must be non-negative");
  }
}

struct Projection {
  std::vector<double> mu;
  std::vector<double> conditional;  // diagonal of S1 - S12 S2^-1 S21
  std::vector<double> explained;    // diagonal of S12 S2^-1 S2|D S2^-1 S12^T
};

Projection project(const DiagonalTVector& prior, const DiagonalTVector& x2_prior,
                   const MomentPair& x2_post, const CrossScale& cross) {
  const std::size_t d1 = prior.size();
  Projection p;
  p.mu.resize(d1);
  p.conditional.resize(d1);
  p.explained.resize(d1);
  for (std::size_t r = 0; r < d1; ++r) {
    double shift = 0.0;
    double reduction = 0.0;
    double explained = 0.0;
    for (const auto& e : cross.row(r)) {
      const double s2 = x2_prior.tau2[e.col];
      if (s2 < kMinConditioningScale) continue;
      const double gain = e.value / s2;
      shift += gain * (x2_post.mu[e.col] - x2_prior.mu[e.col]);
      reduction += gain * e.value;
      explained += gain * gain * x2_post.scale[e.col];
    }
    // With a diagonal X2 scale the joint block need not be positive
    // semi-definite. Such a row is shrunk onto the boundary, where X2
    // explains all of the prior scale of X1_r.
    double shrink = 1.0;
    if (reduction > prior.tau2[r]) shrink = reduction > 0.0 ? prior.tau2[r] / reduction : 0.0;
    p.mu[r] = prior.mu[r] + std::sqrt(shrink) * shift;
    p.conditional[r] = std::max(prior.tau2[r] - shrink * reduction, 0.0);
    p.explained[r] = shrink * explained;
  }
  return p;
}

}  // namespace

double cross_scale_a_z(double mu_a, double mu_z, double tau2_z, double nu_z) {
  if (!(nu_z > 2.0)) {
    throw std::domain_error("cross_scale_a_z: nu must exceed 2, got " + std::to_string(nu_z));
  }
  return nu_z / (nu_z - 2.0) * tau2_z + mu_z * mu_z - mu_a * mu_z;
}

CrossScale cross_cov_wz_a(const LayerState& layer, std::span<const double> z_in_mu,
                          std::span<const double> z_in_cov, bool include_inputs) {
  const std::size_t n_in = layer.fan_in;
  const std::size_t n_out = layer.fan_out;
  if (z_in_mu.size() != n_in || z_in_cov.size() != n_in) {
    throw std::invalid_argument("cross_cov_wz_a: input dimension mismatch");
  }
  if (layer.w_mu.rows() != n_out || layer.w_mu.cols() != n_in + 1) {
    throw std::invalid_argument("cross_cov_wz_a: weight shape mismatch");
  }
  const double cov_per_scale = variance_from_scale(1.0, layer.nu_w);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(n_out));
  const std::size_t n_weights = n_out * (n_in + 1);

  CrossScale out(n_weights + (include_inputs ? n_in : 0), n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const auto w_tau2 = layer.w_tau2.row(i);
    for (std::size_t j = 0; j <= n_in; ++j) {
      const double z = j < n_in ? z_in_mu[j] : 1.0;
      out.push(i * (n_in + 1) + j, i, cov_per_scale * w_tau2[j] * z * inv_sqrt_m);
    }
  }
  if (include_inputs) {
    for (std::size_t j = 0; j < n_in; ++j) {
      for (std::size_t i = 0; i < n_out; ++i) {
        out.push(n_weights + j, i, z_in_cov[j] * layer.w_mu(i, j) * inv_sqrt_m);
      }
    }
  }
  return out;
}

PosteriorUpdate posterior_update(const DiagonalTVector& prior, const DiagonalTVector& x2_prior,
                                 const MomentPair& x2_post, const CrossScale& cross_scale,
                                 const UpdateOptions& options) {
  check_update_inputs(prior, x2_prior, x2_post, cross_scale);
  const double nu = x2_prior.nu;
  const double d2 = options.d2 > 0.0 ? options.d2 : static_cast<double>(x2_prior.size());
  const double denom = nu + d2 -
                       (options.denominator == ScaleDenominator::kVariance ? 2.0 : 0.0);
  if (!(denom > 0.0)) throw std::domain_error("posterior_update: non-positive denominator");

  double innovation = 0.0;
  for (std::size_t c = 0; c < x2_prior.size(); ++c) {
    const double s2 = x2_prior.tau2[c];
    if (s2 < kMinConditioningScale) continue;
    const double d = x2_post.mu[c] - x2_prior.mu[c];
    innovation += (d * d + x2_post.scale[c]) / s2;
  }
  const double factor = (nu + innovation) / denom;

  Projection p = project(prior, x2_prior, x2_post, cross_scale);
  PosteriorUpdate out;
  out.mu_post = std::move(p.mu);
  out.scale_post.resize(prior.size());
  for (std::size_t r = 0; r < prior.size(); ++r) {
    out.scale_post[r] = factor * p.conditional[r] + p.explained[r];
  }
  out.nu_post = prior.nu + 1.0;
  return out;
}

PosteriorUpdate gaussian_limit_update(const DiagonalTVector& prior,
                                      const DiagonalTVector& x2_prior,
                                      const MomentPair& x2_post, const CrossScale& cross_scale) {
  check_update_inputs(prior, x2_prior, x2_post, cross_scale);
  Projection p = project(prior, x2_prior, x2_post, cross_scale);
  PosteriorUpdate out;
  out.mu_post = std::move(p.mu);
  out.scale_post.resize(prior.size());
  for (std::size_t r = 0; r < prior.size(); ++r) {
    out.scale_post[r] = p.conditional[r] + p.explained[r];
  }
  out.nu_post = prior.nu;
  return out;
}

void backward_pass(std::span<LayerState> network, const ForwardTrace& trace, double y,
                   double noise_var, const BackwardOptions& options) {
  if (trace.depth() != network.size()) {
    throw std::invalid_argument("backward_pass: trace depth does not match the network");
  }
  if (!std::isfinite(y)) throw std::domain_error("backward_pass: target must be finite");
  if (!(noise_var >= 0.0)) throw std::domain_error("backward_pass: noise variance must be >= 0");

  auto update = [&](const DiagonalTVector& x1, const DiagonalTVector& x2,
                    const MomentPair& x2_post, const CrossScale& cross) {
    return options.gaussian_limit ? gaussian_limit_update(x1, x2, x2_post, cross)
                                  : posterior_update(x1, x2, x2_post, cross, options.update);
  };

  // Posterior message for the output of the layer being processed.
  MomentPair message{{y}, {0.0}};
  for (std::size_t step = 0; step < network.size(); ++step) {
    const std::size_t l = network.size() - 1 - step;
    LayerState& layer = network[l];
    const PreActivationMoments& pre = trace.pre[l];
    const PostActivationMoments& post = trace.post[l];
    const double nu = layer.nu_w;
    const std::size_t n_out = layer.fan_out;

    // a_l from the updated z_{l+1}.
    DiagonalTVector a_prior{pre.mu, pre.tau2, nu};
    DiagonalTVector z_out_prior;
    CrossScale a_z(n_out, n_out);
    if (l + 1 == network.size()) {
      z_out_prior.mu = pre.mu;
      z_out_prior.tau2 = pre.tau2;
      const double noise_scale = scale_from_variance(noise_var, nu);
      for (double& s : z_out_prior.tau2) s += noise_scale;
      z_out_prior.nu = nu;
      a_z = CrossScale::diagonal(pre.tau2);
    } else {
      z_out_prior = DiagonalTVector{post.mu, post.tau2, post.nu};
      const double cross_nu = (options.cross_dof == CrossDof::kPreviousLayer && l > 0)
                                  ? network[l - 1].nu_w
                                  : post.nu;
      std::vector<double> cross(n_out);
      for (std::size_t i = 0; i < n_out; ++i) {
        cross[i] = scale_from_variance(
            cross_scale_a_z(pre.mu[i], post.mu[i], post.tau2[i], cross_nu), nu);
      }
      a_z = CrossScale::diagonal(cross);
    }
    const PosteriorUpdate a_post = update(a_prior, z_out_prior, message, a_z);

    // (W_l, z_l) jointly from the updated a_l.
    const bool has_inputs = l > 0;
    const std::size_t n_in = layer.fan_in;
    const std::size_t n_weights = layer.weight_count();
    std::vector<double> z_in_mu;
    std::vector<double> z_in_cov;
    if (has_inputs) {
      z_in_mu = trace.post[l - 1].mu;
      z_in_cov = trace.post[l - 1].var;
    } else {
      z_in_mu = trace.input;
      z_in_cov.assign(n_in, 0.0);
    }
    DiagonalTVector joint;
    joint.nu = nu;
    joint.mu = layer.w_mu.data();
    joint.tau2 = layer.w_tau2.data();
    if (has_inputs) {
      const auto& z_in_tau2 = trace.post[l - 1].tau2;
      joint.mu.insert(joint.mu.end(), z_in_mu.begin(), z_in_mu.end());
      joint.tau2.insert(joint.tau2.end(), z_in_tau2.begin(), z_in_tau2.end());
    }
    const CrossScale wz_a =
        cross_cov_wz_a(layer, z_in_mu, z_in_cov, has_inputs).scaled(scale_from_variance(1.0, nu));
    const PosteriorUpdate joint_post =
        update(joint, a_prior, MomentPair{a_post.mu_post, a_post.scale_post}, wz_a);

    for (std::size_t k = 0; k < n_weights; ++k) {
      const double s = joint_post.scale_post[k];
      if (!(s > 0.0) || !std::isfinite(s) || !std::isfinite(joint_post.mu_post[k])) {
        throw std::runtime_error("backward_pass: non-positive or non-finite weight scale in layer " +
                                 std::to_string(l));
      }
    }
    std::copy_n(joint_post.mu_post.begin(), n_weights, layer.w_mu.data().begin());
    std::copy_n(joint_post.scale_post.begin(), n_weights, layer.w_tau2.data().begin());
    layer.nu_w = joint_post.nu_post;

    if (has_inputs) {
      message.mu.assign(joint_post.mu_post.begin() + static_cast<std::ptrdiff_t>(n_weights),
                        joint_post.mu_post.end());
      message.scale.assign(joint_post.scale_post.begin() + static_cast<std::ptrdiff_t>(n_weights),
                           joint_post.scale_post.end());
    }
  }
}

}  // namespace habnn
