#include "habnn/tdist.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace habnn {

UnivariateT::UnivariateT(double mu_, double tau2_, double nu_) : mu(mu_), tau2(tau2_), nu(nu_) {
  if (!std::isfinite(mu)) throw std::domain_error("t location must be finite");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) {
    throw std::domain_error("t squared scale must be positive, got " + std::to_string(tau2));
  }
  if (!(nu > 0.0)) {
    throw std::domain_error("t degrees of freedom must be positive, got " + std::to_string(nu));
  }
}

void DiagonalTVector::validate() const {
  if (mu.size() != tau2.size()) {
    throw std::invalid_argument("DiagonalTVector: location and scale lengths differ");
  }
  if (!(nu > 0.0)) throw std::domain_error("DiagonalTVector: degrees of freedom must be positive");
  for (double s : tau2) {
    if (!(s > 0.0)) throw std::domain_error("DiagonalTVector: scales must be positive");
  }
}

CrossScale::CrossScale(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  row_start_.reserve(rows + 1);
  row_start_.push_back(0);
}

CrossScale CrossScale::diagonal(std::span<const double> values) {
  CrossScale out(values.size(), values.size());
  out.entries_.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.push(i, i, values[i]);
  return out;
}

CrossScale CrossScale::dense(std::size_t rows, std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) throw std::invalid_argument("CrossScale::dense: size mismatch");
  CrossScale out(rows, cols);
  out.entries_.reserve(values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.push(r, c, values[r * cols + c]);
  }
  return out;
}

void CrossScale::push(std::size_t row, std::size_t col, double value) {
  if (row >= rows_ || col >= cols_) throw std::out_of_range("CrossScale::push: index out of range");
  if (row < open_row_) throw std::invalid_argument("CrossScale::push: rows must be non-decreasing");
  while (row_start_.size() <= row) row_start_.push_back(entries_.size());
  open_row_ = row;
  entries_.push_back({col, value});
}

std::span<const CrossScale::Entry> CrossScale::row(std::size_t r) const {
  if (r >= rows_) throw std::out_of_range("CrossScale::row: index out of range");
  const std::size_t begin = r < row_start_.size() ? row_start_[r] : entries_.size();
  const std::size_t end = r + 1 < row_start_.size() ? row_start_[r + 1] : entries_.size();
  return {entries_.data() + begin, end - begin};
}

CrossScale CrossScale::scaled(double factor) const {
  CrossScale out = *this;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

std::vector<double> CrossScale::to_dense() const {
  std::vector<double> out(rows_ * cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (const auto& e : row(r)) out[r * cols_ + e.col] += e.value;
  }
  return out;
}

std::vector<double> ConditionalTParams::scale_cond() const {
  std::vector<double> out(scale_cond_base);
  for (double& s : out) s *= data_dependent_factor;
  return out;
}

double variance_of(const UnivariateT& t) { return variance_from_scale(t.tau2, t.nu); }

double scale_from_variance(double variance, double nu) {
  if (!(nu > 2.0)) {
    throw std::domain_error("scale/variance conversion needs nu > 2, got " + std::to_string(nu));
  }
  return (nu - 2.0) / nu * variance;
}

double variance_from_scale(double scale, double nu) {
  if (!(nu > 2.0)) {
    throw std::domain_error("variance undefined for nu <= 2, got " + std::to_string(nu));
  }
  return nu / (nu - 2.0) * scale;
}

double sample_one(const UnivariateT& t, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(t.nu);
  const double n = normal(rng);
  const double c = chi2(rng);
  return t.mu + std::sqrt(t.tau2) * n / std::sqrt(c / t.nu);
}

std::vector<double> sample(const UnivariateT& t, std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(t.nu);
  const double scale = std::sqrt(t.tau2);
  std::vector<double> out(n);
  for (auto& v : out) {
    const double z = normal(rng);
    const double c = chi2(rng);
    v = t.mu + scale * z / std::sqrt(c / t.nu);
  }
  return out;
}

ConditionalTParams conditional_params(std::span<const double> mu1,
                                      std::span<const double> scale1,
                                      std::span<const double> mu2,
                                      std::span<const double> scale2,
                                      const CrossScale& cross_scale, double nu,
                                      std::span<const double> x2) {
  const std::size_t d1 = mu1.size();
  const std::size_t d2 = mu2.size();
  if (scale1.size() != d1 || scale2.size() != d2 || x2.size() != d2 ||
      cross_scale.rows() != d1 || cross_scale.cols() != d2) {
    throw std::invalid_argument("conditional_params: dimension mismatch");
  }
  if (!(nu > 0.0)) throw std::domain_error("conditional_params: nu must be positive");
  for (double s : scale2) {
    if (!(s > 0.0)) throw std::domain_error("conditional_params: X2 scales must be positive");
  }

  ConditionalTParams out;
  out.mu_cond.resize(d1);
  out.scale_cond_base.resize(d1);
  out.dof_cond = nu + static_cast<double>(d2);

  double mahalanobis = 0.0;
  for (std::size_t c = 0; c < d2; ++c) {
    const double r = x2[c] - mu2[c];
    mahalanobis += r * r / scale2[c];
  }
  out.data_dependent_factor = (nu + mahalanobis) / (nu + static_cast<double>(d2));

  for (std::size_t r = 0; r < d1; ++r) {
    double mean = mu1[r];
    double reduction = 0.0;
    for (const auto& e : cross_scale.row(r)) {
      mean += e.value / scale2[e.col] * (x2[e.col] - mu2[e.col]);
      reduction += e.value * e.value / scale2[e.col];
    }
    out.mu_cond[r] = mean;
    const double base = scale1[r] - reduction;
    if (base < -1e-9 * scale1[r]) {
      throw std::domain_error("conditional_params: joint scale is not positive semi-definite");
    }
    out.scale_cond_base[r] = base > 0.0 ? base : 0.0;
  }
  return out;
}

}  // namespace habnn
