#include "habnn/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "habnn/backward.hpp"
#include "habnn/forward.hpp"
#include "habnn/specfn.hpp"
#include "habnn/tdist.hpp"

namespace habnn::oracle {
namespace {

OracleReport compare(std::string quantity, std::string formula, double analytic,
                     double empirical, double se, const OracleOptions& options) {
  OracleReport r;
  r.quantity = std::move(quantity);
  r.formula = std::move(formula);
  r.analytic = analytic + options.analytic_perturbation;
  r.empirical = empirical;
  r.standard_error = se;
  r.samples = options.samples;
  r.k = options.k;
  const double slack = 1e-12 * (1.0 + std::abs(r.analytic));
  r.pass = std::abs(r.analytic - r.empirical) <= options.k * se + slack;
  return r;
}

// Independent Student's t draws, written out here rather than through
// habnn::sample so the oracle does not share the code path it checks.
class TSampler {
 public:
  explicit TSampler(std::uint64_t seed) : rng_(seed) {}

  double draw(double mu, double tau2, double nu) {
    std::gamma_distribution<double> gamma(0.5 * nu, 2.0 / nu);  // chi2(nu) / nu
    const double w = gamma(rng_);
    return mu + std::sqrt(tau2 / w) * normal_(rng_);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

std::string OracleReport::to_line() const {
  std::ostringstream os;
  os.precision(8);
  os << (pass ? "PASS " : "FAIL ") << quantity << " [" << formula << "] analytic=" << analytic
     << " empirical=" << empirical << " se=" << standard_error << " n=" << samples
     << " k=" << k;
  return os.str();
}

SampleMoments summarize(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("summarize: need at least two samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  SampleMoments out;
  out.mean = mean;
  out.variance = m2 * n / (n - 1.0);
  out.se_mean = std::sqrt(m2 / n);
  out.se_variance = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return out;
}

std::pair<OracleReport, OracleReport> relu_moments(double mu, double tau2, double nu,
                                                   const OracleOptions& options) {
  TSampler sampler(options.seed);
  std::vector<double> out(options.samples);
  std::size_t active = 0;
  for (auto& v : out) {
    const double a = sampler.draw(mu, tau2, nu);
    v = a > 0.0 ? a : 0.0;
    active += a > 0.0;
  }
  const SampleMoments s = summarize(out);
  const double mean = relu_mean(mu, tau2, nu);
  const double var = relu_variance(mu, tau2, nu, mean);
  std::ostringstream tag;
  tag << "(mu=" << mu << ",tau2=" << tau2 << ",nu=" << nu << ")";
  const std::string mean_name = "relu_mean" + tag.str();
  const std::string var_name = "relu_variance" + tag.str();
  const char* mean_formula = "ReLU mean of a Student's t";
  const char* var_formula = "ReLU variance of a Student's t";
  if (active > 0) {
    return {compare(mean_name, mean_formula, mean, s.mean, s.se_mean, options),
            compare(var_name, var_formula, var, s.variance, s.se_variance, options)};
  }

  // No draw reached a > 0, so the sample moments are exactly zero and their
  // plug-in standard errors vanish. Judge the zero count with the binomial
  // law instead, and the moments against standard errors implied by the
  // analytic values: Var(f) for the mean, and the Cauchy-Schwarz bound
  // E[f^4] >= E[f^2]^2 / p for the variance.
  const double n = static_cast<double>(options.samples);
  const double p = 1.0 - specfn::t_cdf(0.0, mu, tau2, nu);
  const double alpha = std::erfc(options.k / std::sqrt(2.0));
  const bool plausible = n * std::log1p(-p) >= std::log(alpha);
  const double second = var + mean * mean;
  const double se_mean = std::sqrt(var / n);
  const double se_var = p > 0.0 ? second * std::sqrt((1.0 - p) / (p * n)) : 0.0;
  OracleReport m = compare(mean_name, mean_formula, mean, s.mean, se_mean, options);
  OracleReport v = compare(var_name, var_formula, var, s.variance, se_var, options);
  m.pass = m.pass && plausible;
  v.pass = v.pass && plausible;
  return {m, v};
}

std::pair<OracleReport, OracleReport> posterior_moments(const ScalarJoint& joint,
                                                        const ScalarPosterior& x2_post,
                                                        const OracleOptions& options) {
  if (!(x2_post.nu > 2.0)) throw std::domain_error("posterior oracle: X2 posterior needs nu > 2");
  const DiagonalTVector x1{{joint.mu1}, {joint.scale1}, joint.nu};
  const DiagonalTVector x2{{joint.mu2}, {joint.scale2}, joint.nu};
  const CrossScale cross = CrossScale::diagonal(std::vector<double>{joint.cross});
  const PosteriorUpdate analytic = posterior_update(
      x1, x2, MomentPair{{x2_post.mu}, {x2_post.variance}}, cross,
      UpdateOptions{ScaleDenominator::kVariance, 1.0});

  TSampler sampler(options.seed);
  const double x2_scale = scale_from_variance(x2_post.variance, x2_post.nu);
  // Conditional law of X1 given X2, evaluated inline.
  const double gain = joint.cross / joint.scale2;
  const double base = joint.scale1 - gain * joint.cross;
  std::vector<double> draws(options.samples);
  for (auto& v : draws) {
    const double x2v = sampler.draw(x2_post.mu, x2_scale, x2_post.nu);
    const double r = x2v - joint.mu2;
    const double cond_mu = joint.mu1 + gain * r;
    const double cond_scale = (joint.nu + r * r / joint.scale2) / (joint.nu + 1.0) * base;
    v = cond_scale > 0.0 ? sampler.draw(cond_mu, cond_scale, joint.nu + 1.0) : cond_mu;
  }
  const SampleMoments s = summarize(draws);
  return {compare("posterior_mean", "t posterior mean update", analytic.mu_post[0], s.mean,
                  s.se_mean, options),
          compare("posterior_variance", "t posterior covariance update (nu + d2 - 2)",
                  analytic.scale_post[0], s.variance, s.se_variance, options)};
}

std::pair<OracleReport, OracleReport> linear_moments(const LayerState& layer,
                                                     std::span<const double> z_mu,
                                                     std::span<const double> z_cov, double nu_z,
                                                     const OracleOptions& options) {
  const PreActivationMoments analytic = habnn::linear_moments(layer, z_mu, z_cov);
  const std::size_t n_in = layer.fan_in;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(layer.fan_out));
  std::vector<double> z_scale(n_in, 0.0);
  for (std::size_t j = 0; j < n_in; ++j) {
    if (z_cov[j] > 0.0) z_scale[j] = scale_from_variance(z_cov[j], nu_z);
  }

  TSampler sampler(options.seed);
  std::vector<double> draws(options.samples);
  for (auto& v : draws) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= n_in; ++j) {
      const double w_tau2 = layer.w_tau2(0, j);
      const double w = w_tau2 > 0.0 ? sampler.draw(layer.w_mu(0, j), w_tau2, layer.nu_w)
                                    : layer.w_mu(0, j);
      double z = 1.0;
      if (j < n_in) z = z_scale[j] > 0.0 ? sampler.draw(z_mu[j], z_scale[j], nu_z) : z_mu[j];
      acc += w * z;
    }
    v = acc * inv_sqrt_m;
  }
  const SampleMoments s = summarize(draws);
  return {compare("linear_mean", "pre-activation mean", analytic.mu[0], s.mean, s.se_mean,
                  options),
          compare("linear_variance", "pre-activation variance", analytic.var[0], s.variance,
                  s.se_variance, options)};
}

OracleReport cross_a_z(double mu, double tau2, double nu, const OracleOptions& options) {
  TSampler sampler(options.seed);
  std::vector<double> a(options.samples);
  std::vector<double> f(options.samples);
  double mean_a = 0.0;
  double mean_f = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = sampler.draw(mu, tau2, nu);
    f[i] = a[i] > 0.0 ? a[i] : 0.0;
    mean_a += a[i];
    mean_f += f[i];
  }
  mean_a /= static_cast<double>(a.size());
  mean_f /= static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (a[i] - mean_a) * (f[i] - mean_f);
  const SampleMoments s = summarize(a);

  const double mu_z = relu_mean(mu, tau2, nu);
  const double tau2_z = scale_from_variance(relu_variance(mu, tau2, nu, mu_z), nu);
  const double analytic = cross_scale_a_z(mu, mu_z, tau2_z, nu);
  std::ostringstream tag;
  tag << "(mu=" << mu << ",tau2=" << tau2 << ",nu=" << nu << ")";
  return compare("cross_a_z" + tag.str(), "Cov(a, ReLU(a))", analytic, s.mean, s.se_mean,
                 options);
}

std::vector<GridPoint> relu_grid() {
  std::vector<GridPoint> grid;
  for (double mu : {-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0}) {
    for (double tau2 : {0.25, 1.0, 4.0}) {
      for (double nu : {3.0, 4.0, 12.0, 50.0}) grid.push_back({mu, tau2, nu});
    }
  }
  return grid;
}

}  // namespace habnn::oracle
