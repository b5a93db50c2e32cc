#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace spectrack::stats {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Gaussian fitted to benign spectral-distance observations.
struct GaussianReference {
  Vector mean;
  Matrix covariance;  // after shrinkage
  double shrinkage_intensity = 0.0;
  std::size_t sample_count = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  std::uint64_t correct() const noexcept { return tp + tn; }
  std::uint64_t incorrect() const noexcept { return fp + fn; }
  /// Throws InvalidInput on an empty tally.
  double accuracy() const;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Column-wise mean of an n x C observation matrix (one observation per row).
Vector fit_mean(const Matrix& rows);

/// Ledoit-Wolf shrinkage towards (trace(S)/C) I, with S the 1/n sample
/// covariance. Requires at least two rows.
GaussianReference ledoit_wolf(const Matrix& rows);

struct MahalanobisResult {
  double value = 0.0;
  /// True when the covariance needed a diagonal jitter to factorize.
  bool jittered = false;
};

/// (x - mean)^T Sigma^{-1} (x - mean) via a Cholesky solve. If the
/// factorization fails, retries once with 1e-12 * trace/C added to the
/// diagonal; throws SingularCovariance if that also fails.
MahalanobisResult mahalanobis_sq_detailed(const Vector& x, const GaussianReference& ref);
double mahalanobis_sq(const Vector& x, const GaussianReference& ref);

/// Regularized lower incomplete gamma P(s, x).
double regularized_gamma_p(double s, double x);
double chi2_cdf(unsigned dof, double x);
/// tau with chi2_cdf(dof, tau) == alpha, to 1e-10 absolute.
double chi2_quantile(unsigned dof, double alpha);

/// Mann-Whitney estimate of P(pos > neg) + 0.5 P(pos == neg).
double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

/// Two-sided Fisher exact test on [[a, b], [c, d]]; sums every table with the
/// observed margins whose probability does not exceed the observed one.
double fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

}  // namespace spectrack::stats
