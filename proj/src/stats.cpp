#include "spectrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spectrack/error.hpp"

namespace spectrack::stats {

double ConfusionCounts::accuracy() const {
  if (total() == 0) fail(ErrorKind::InvalidInput, "accuracy of an empty confusion matrix");
  return static_cast<double>(correct()) / static_cast<double>(total());
}

Vector fit_mean(const Matrix& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) fail(ErrorKind::InvalidInput, "cannot fit the mean of an empty matrix");
  return rows.colwise().mean().transpose();
}

GaussianReference ledoit_wolf(const Matrix& rows) {
  const auto n = rows.rows();
  const auto dim = rows.cols();
  if (n < 2) {
    fail(ErrorKind::InsufficientSamples, "Ledoit-Wolf needs at least 2 observations, got " + std::to_string(n));
  }
  if (dim == 0) fail(ErrorKind::InvalidInput, "observations have zero width");

  GaussianReference ref;
  ref.mean = fit_mean(rows);
  ref.sample_count = static_cast<std::size_t>(n);

  const Matrix centered = rows.rowwise() - ref.mean.transpose();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix sample = inv_n * (centered.transpose() * centered);

  const double target_scale = sample.trace() / static_cast<double>(dim);
  Matrix deviation = sample;
  deviation.diagonal().array() -= target_scale;
  const double dispersion = deviation.squaredNorm();  // ||S - F||_F^2

  // Average squared distance of each rank-one contribution from S.
  double estimator_variance = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector xk = centered.row(k).transpose();
    estimator_variance += (xk * xk.transpose() - sample).squaredNorm();
  }
  estimator_variance *= inv_n * inv_n;

  double intensity = 0.0;
  if (dispersion > 0.0) intensity = std::clamp(std::min(estimator_variance, dispersion) / dispersion, 0.0, 1.0);

  ref.shrinkage_intensity = intensity;
  ref.covariance = (1.0 - intensity) * sample;
  ref.covariance.diagonal().array() += intensity * target_scale;
  // Exact symmetry; the products above can differ in the last ulp.
  ref.covariance = 0.5 * (ref.covariance + ref.covariance.transpose()).eval();
  return ref;
}

namespace {

bool usable_factor(const Eigen::LLT<Matrix>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  // A pivot this small relative to the largest means the matrix is
  // numerically singular even though the factorization completed.
  return largest > 0.0 && diag.minCoeff() > largest * 1e-9;
}

}  // namespace

MahalanobisResult mahalanobis_sq_detailed(const Vector& x, const GaussianReference& ref) {
  const auto dim = ref.mean.size();
  if (x.size() != dim || ref.covariance.rows() != dim || ref.covariance.cols() != dim) {
    fail(ErrorKind::InvalidInput, "dimension mismatch: x has " + std::to_string(x.size()) + " entries, reference has " +
                                      std::to_string(dim));
  }
  if (!ref.covariance.allFinite()) fail(ErrorKind::SingularCovariance, "covariance has non-finite entries");
  const Vector diff = x - ref.mean;

  MahalanobisResult result;
  Eigen::LLT<Matrix> llt(ref.covariance);
  if (!usable_factor(llt)) {
    double scale = ref.covariance.trace() / static_cast<double>(dim);
    if (!(scale > 0.0)) scale = 1.0;
    Matrix jittered = ref.covariance;
    jittered.diagonal().array() += 1e-12 * scale;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::SingularCovariance, "covariance is singular even after diagonal jitter");
    }
    result.jittered = true;
  }
  const Vector solved = llt.solve(diff);
  const double value = diff.dot(solved);
  if (!std::isfinite(value)) fail(ErrorKind::SingularCovariance, "non-finite Mahalanobis distance");
  result.value = std::max(0.0, value);
  return result;
}

double mahalanobis_sq(const Vector& x, const GaussianReference& ref) { return mahalanobis_sq_detailed(x, ref).value; }

namespace {

// Series for P(s, x), valid for x < s + 1.
double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Continued fraction (modified Lentz) for Q(s, x), valid for x >= s + 1.
double gamma_q_fraction(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

double chi2_pdf(unsigned dof, double x) {
  if (x <= 0.0) return 0.0;
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

}  // namespace

double regularized_gamma_p(double s, double x) {
  if (!(s > 0.0) || !(x >= 0.0)) fail(ErrorKind::InvalidInput, "incomplete gamma needs s > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < s + 1.0) return gamma_p_series(s, x);
  return 1.0 - gamma_q_fraction(s, x);
}

double chi2_cdf(unsigned dof, double x) {
  if (dof == 0) fail(ErrorKind::InvalidInput, "chi-squared needs at least one degree of freedom");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(unsigned dof, double alpha) {
  if (dof == 0) fail(ErrorKind::InvalidInput, "chi-squared needs at least one degree of freedom");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");

  double lo = 0.0;
  double hi = dof + 40.0 * std::sqrt(2.0 * dof);
  while (chi2_cdf(dof, hi) < alpha) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-7 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(dof, mid) < alpha ? lo : hi) = mid;
  }

  // Newton polish, kept inside the bracket.
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 50; ++i) {
    const double f = chi2_cdf(dof, x) - alpha;
    const double slope = chi2_pdf(dof, x);
    if (f < 0.0) lo = x; else hi = x;
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step < 1e-13 * std::max(1.0, x)) break;
  }
  return x;
}

double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    fail(ErrorKind::InvalidInput, "ROC-AUC needs at least one positive and one negative score");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(positive_scores.begin(), positive_scores.end(), finite) ||
      !std::all_of(negative_scores.begin(), negative_scores.end(), finite)) {
    fail(ErrorKind::InvalidInput, "ROC-AUC scores must be finite");
  }

  std::vector<double> negatives(negative_scores.begin(), negative_scores.end());
  std::sort(negatives.begin(), negatives.end());

  // Twice the Mann-Whitney U, kept in integers so the tie correction is exact.
  std::uint64_t twice_u = 0;
  for (double p : positive_scores) {
    const auto [first, last] = std::equal_range(negatives.begin(), negatives.end(), p);
    const auto below = static_cast<std::uint64_t>(first - negatives.begin());
    const auto ties = static_cast<std::uint64_t>(last - first);
    twice_u += 2 * below + ties;
  }
  const double pairs = static_cast<double>(positive_scores.size()) * static_cast<double>(negatives.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

namespace {

double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t row1 = a + b;
  const std::uint64_t row2 = c + d;
  const std::uint64_t col1 = a + c;
  const std::uint64_t total = row1 + row2;
  if (total == 0) fail(ErrorKind::InvalidInput, "Fisher's exact test on an all-zero table");

  // Hypergeometric law of the top-left cell given the margins.
  const double log_denominator = log_choose(total, col1);
  auto log_prob = [&](std::uint64_t x) {
    return log_choose(row1, x) + log_choose(row2, col1 - x) - log_denominator;
  };

  const std::uint64_t x_min = col1 > row2 ? col1 - row2 : 0;
  const std::uint64_t x_max = std::min(row1, col1);
  const double observed = log_prob(a);
  // Tables tied with the observed one must survive lgamma rounding, so the
  // comparison allows a 1e-7 relative slack (the usual convention).
  const double cutoff = observed + std::log1p(1e-7);

  double p_value = 0.0;
  for (std::uint64_t x = x_min; x <= x_max; ++x) {
    const double lp = log_prob(x);
    if (lp <= cutoff) p_value += std::exp(lp);
  }
  return std::min(1.0, p_value);
}

}  // namespace spectrack::stats
