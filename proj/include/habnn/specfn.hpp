#pragma once

// Special functions needed by the Student's-t moment formulas.
//
// Every function validates its domain and throws std::domain_error on
// invalid input. Iterative expansions throw std::runtime_error when they
// fail to converge.

namespace habnn::specfn {

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// ln Gamma(x + d) - ln Gamma(x), without cancellation for large x.
double log_gamma_ratio(double x, double d);

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double log_beta(double a, double b);

/// Complete beta function B(a, b).
double beta(double a, double b);

/// Regularized lower incomplete beta I_z(a, b) = B_z(a, b) / B(a, b).
double regularized_incomplete_beta(double z, double a, double b);

/// I_z(a, b) with zc = 1 - z supplied by a caller that knows it exactly.
double regularized_incomplete_beta(double z, double zc, double a, double b);

/// 1 - I_z(a, b), evaluated without cancellation (equals I_{1-z}(b, a)).
double regularized_incomplete_beta_complement(double z, double a, double b);

/// Non-regularized lower incomplete beta B_z(a, b) = int_0^z u^(a-1) (1-u)^(b-1) du.
double incomplete_beta(double z, double a, double b);

/// CDF of the location-scale Student's t with squared scale tau2 and
/// nu degrees of freedom. Accepts +-infinity for x.
double t_cdf(double x, double mu, double tau2, double nu);

/// Log density of the location-scale Student's t.
double t_logpdf(double x, double mu, double tau2, double nu);

}  // namespace habnn::specfn
