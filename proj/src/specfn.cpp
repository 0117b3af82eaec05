#include "habnn/specfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace habnn::specfn {
namespace {

constexpr double kEps = 1e-14;
constexpr int kMaxIterations = 300;
constexpr double kTiny = 1e-300;

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be positive and finite, got " +
                            std::to_string(v));
  }
}

// Modified Lentz evaluation of the continued fraction for I_z(a, b).
double beta_continued_fraction(double z, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * z / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge (a=" +
                           std::to_string(a) + ", b=" + std::to_string(b) +
                           ", z=" + std::to_string(z) + ")");
}

// ln Gamma(x) - [0.5 ln(2 pi) + (x - 0.5) ln x - x], the Stirling remainder.
double stirling_correction(double x) {
  if (x >= 10.0) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12.0 -
                r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))));
  }
  return log_gamma(x) - 0.5 * std::log(2.0 * std::numbers::pi) - (x - 0.5) * std::log(x) + x;
}

// ln z and ln(1 - z) from whichever of z, zc is known more precisely.
double log_of(double v, double complement) {
  return v < 0.5 ? std::log(v) : std::log1p(-complement);
}

// ln[z^a (1 - z)^b / B(a, b)]. For large a and b the Gamma terms are of
// order a ln a and cancel; the Stirling form keeps only the small
// differences, with log1p around the mode z = a / (a + b).
double log_beta_prefactor(double z, double zc, double a, double b) {
  const double log_z = log_of(z, zc);
  const double log_zc = log_of(zc, z);
  if (a < 10.0 || b < 10.0) return a * log_z + b * log_zc - log_beta(a, b);
  const double c = a + b;
  const double d = z * b - zc * a;  // z c - a
  auto term = [&](double n, double r, double log_direct) {
    return std::abs(r) < 0.5 ? n * std::log1p(r) : n * log_direct;
  };
  const double ta = term(a, d / a, log_z + std::log(c / a));
  const double tb = term(b, -d / b, log_zc + std::log(c / b));
  return 0.5 * (std::log(a) + std::log(b) - std::log(c) - std::log(2.0 * std::numbers::pi)) +
         ta + tb + stirling_correction(c) - stirling_correction(a) - stirling_correction(b);
}

struct BetaPair {
  double lower;  // I_z(a, b)
  double upper;  // 1 - I_z(a, b)
};

BetaPair regularized_pair(double z, double zc, double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  if (!(z >= 0.0 && z <= 1.0) || !(zc >= 0.0 && zc <= 1.0)) {
    throw std::domain_error("incomplete beta argument must lie in [0, 1], got " +
                            std::to_string(z));
  }
  if (z == 0.0) return {0.0, 1.0};
  if (zc == 0.0) return {1.0, 0.0};
  const double log_front = log_beta_prefactor(z, zc, a, b);
  if (z < (a + 1.0) / (a + b + 2.0)) {
    const double lower = std::exp(log_front) * beta_continued_fraction(z, a, b) / a;
    return {lower, 1.0 - lower};
  }
  const double upper = std::exp(log_front) * beta_continued_fraction(zc, b, a) / b;
  return {1.0 - upper, upper};
}

// Lower tail P(T <= -|t|) of a standard t with nu degrees of freedom.
double standard_t_lower_tail(double t, double nu) {
  const double t2 = t * t;
  if (!std::isfinite(t2)) return 0.0;
  const double denom = nu + t2;
  return 0.5 * regularized_pair(nu / denom, t2 / denom, 0.5 * nu, 0.5).lower;
}

void check_t_params(double tau2, double nu) {
  require_positive(tau2, "tau2");
  if (!(nu > 0.0) || std::isnan(nu)) {
    throw std::domain_error("degrees of freedom must be positive, got " + std::to_string(nu));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma argument");
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x
    return log_gamma(x + 1.0) - std::log(x);
  }
  const double xm1 = x - 1.0;
  double series = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    series += kLanczos[i] / (xm1 + static_cast<double>(i));
  }
  const double t = xm1 + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (xm1 + 0.5) * std::log(t) - t +
         std::log(series);
}

double log_gamma_ratio(double x, double d) {
  require_positive(x, "log_gamma_ratio argument");
  require_positive(x + d, "log_gamma_ratio shifted argument");
  if (x < 10.0 || x + d < 10.0) return log_gamma(x + d) - log_gamma(x);
  return (x - 0.5) * std::log1p(d / x) + d * std::log(x + d) - d +
         stirling_correction(x + d) - stirling_correction(x);
}

double log_beta(double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  const double small = std::min(a, b);
  const double big = std::max(a, b);
  return log_gamma(small) - log_gamma_ratio(big, small);
}

double beta(double a, double b) { return std::exp(log_beta(a, b)); }

double regularized_incomplete_beta(double z, double a, double b) {
  return regularized_pair(z, 1.0 - z, a, b).lower;
}

double regularized_incomplete_beta_complement(double z, double a, double b) {
  return regularized_pair(z, 1.0 - z, a, b).upper;
}

double regularized_incomplete_beta(double z, double zc, double a, double b) {
  return regularized_pair(z, zc, a, b).lower;
}

double incomplete_beta(double z, double a, double b) {
  const double reg = regularized_incomplete_beta(z, a, b);
  if (reg == 0.0) return 0.0;
  return std::exp(std::log(reg) + log_beta(a, b));
}

double t_cdf(double x, double mu, double tau2, double nu) {
  check_t_params(tau2, nu);
  if (std::isnan(x) || std::isnan(mu)) return std::numeric_limits<double>::quiet_NaN();
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  const double t = (x - mu) / std::sqrt(tau2);
  const double lower = standard_t_lower_tail(t, nu);
  return t < 0.0 ? lower : 1.0 - lower;
}

double t_logpdf(double x, double mu, double tau2, double nu) {
  check_t_params(tau2, nu);
  const double r = x - mu;
  return log_gamma_ratio(0.5 * nu, 0.5) -
         0.5 * std::log(nu * std::numbers::pi * tau2) -
         0.5 * (nu + 1.0) * std::log1p(r * r / (nu * tau2));
}

}  // namespace habnn::specfn
