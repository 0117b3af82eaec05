#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace habnn {

/// Univariate location-scale Student's t: location mu, squared scale tau2,
/// degrees of freedom nu. The variance exists for nu > 2 and equals
/// nu / (nu - 2) * tau2.
struct UnivariateT {
  double mu = 0.0;
  double tau2 = 1.0;
  double nu = 1.0;

  UnivariateT() = default;
  UnivariateT(double mu, double tau2, double nu);
};

/// Mean-field multivariate t: per-coordinate locations and diagonal scales
/// with one shared degrees-of-freedom parameter.
struct DiagonalTVector {
  std::vector<double> mu;
  std::vector<double> tau2;
  double nu = 1.0;

  std::size_t size() const { return mu.size(); }
  /// Throws std::invalid_argument on length mismatch, std::domain_error on
  /// non-positive scales or degrees of freedom.
  void validate() const;
};

/// Posterior location and squared scale of a conditioning variable.
struct MomentPair {
  std::vector<double> mu;
  std::vector<double> scale;
};

/// Sparse cross-scale block Sigma_12 between a d1-dimensional X1 (rows)
/// and a d2-dimensional X2 (columns), stored row-compressed.
///
/// The a <-> z step only needs a diagonal, while the joint (W, z) <-> a step
/// has a block structure where each weight couples to one pre-activation and
/// each incoming activation couples to all of them. Row-compressed storage
/// keeps both linear in the number of weights.
class CrossScale {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  CrossScale(std::size_t rows, std::size_t cols);

  static CrossScale diagonal(std::span<const double> values);
  /// Dense matrix given row-major.
  static CrossScale dense(std::size_t rows, std::size_t cols, std::span<const double> values);

  /// Appends an entry. Rows must be pushed in non-decreasing order.
  void push(std::size_t row, std::size_t col, double value);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return entries_.size(); }
  std::span<const Entry> row(std::size_t r) const;

  /// Copy with every entry multiplied by factor.
  CrossScale scaled(double factor) const;
  std::vector<double> to_dense() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t open_row_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<Entry> entries_;
};

/// Parameters of X1 | X2 = x2 for a jointly t-distributed (X1, X2).
struct ConditionalTParams {
  std::vector<double> mu_cond;
  std::vector<double> scale_cond_base;  // diagonal of Sigma_1 - Sigma_12 Sigma_2^-1 Sigma_21
  double dof_cond = 0.0;                // nu + d2
  double data_dependent_factor = 1.0;   // (nu + Mahalanobis(x2)) / (nu + d2)

  /// Diagonal of the full conditional scale.
  std::vector<double> scale_cond() const;
};

/// Covariance of t; throws std::domain_error unless nu > 2.
double variance_of(const UnivariateT& t);
/// Scale from covariance for a given nu, (nu - 2) / nu * variance.
double scale_from_variance(double variance, double nu);
/// Covariance from scale for a given nu, nu / (nu - 2) * scale.
double variance_from_scale(double scale, double nu);

/// Draws mu + sqrt(tau2) * N / sqrt(chi2(nu) / nu).
double sample_one(const UnivariateT& t, std::mt19937_64& rng);
std::vector<double> sample(const UnivariateT& t, std::mt19937_64& rng, std::size_t n);

/// Conditional distribution of a partitioned multivariate t with diagonal
/// marginal scales. Only the diagonal of the conditional scale is kept.
ConditionalTParams conditional_params(std::span<const double> mu1,
                                      std::span<const double> scale1,
                                      std::span<const double> mu2,
                                      std::span<const double> scale2,
                                      const CrossScale& cross_scale, double nu,
                                      std::span<const double> x2);

}  // namespace habnn
