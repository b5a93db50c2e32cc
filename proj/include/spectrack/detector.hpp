#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectrack/spectra.hpp"
#include "spectrack/stats.hpp"
#include "spectrack/tracking.hpp"

namespace spectrack {

inline constexpr double kDefaultAlpha = 0.999;

enum class Decision { Clean, Poisoned };
enum class GroundTruth { Clean, Trojaned };

std::string_view to_string(Decision d) noexcept;

struct DetectionVerdict {
  double mahalanobis_sq = 0.0;
  double threshold = 0.0;
  double alpha = kDefaultAlpha;
  Decision decision = Decision::Clean;
  DistanceVector distance_vector;
  std::vector<std::string> warnings;
  /// Which clean dataset the spectra were computed on, as supplied by the caller.
  std::string probe_dataset;
};

stats::GaussianReference fit_reference(const Csdd& csdd);

/// Fits the reference once and judges any number of updates against it.
class Detector {
 public:
  explicit Detector(Csdd csdd);

  const Csdd& csdd() const noexcept { return csdd_; }
  const stats::GaussianReference& reference() const noexcept { return reference_; }

  /// Poisoned iff D^2_M > chi2_quantile(C, alpha); a tie is Clean.
  DetectionVerdict detect(const ActivationDump& dump_prev, const ActivationDump& dump_new, double alpha = kDefaultAlpha,
                          std::string probe_dataset = {}) const;

 private:
  Csdd csdd_;
  stats::GaussianReference reference_;
  std::vector<std::string> reference_warnings_;
};

DetectionVerdict detect(const ActivationDump& dump_prev, const ActivationDump& dump_new, const Csdd& csdd,
                        double alpha = kDefaultAlpha);

struct LabeledVerdict {
  DetectionVerdict verdict;
  GroundTruth truth = GroundTruth::Clean;
};

struct Evaluation {
  stats::ConfusionCounts counts;
  double accuracy = 0.0;
};

Evaluation evaluate_detector(std::span<const LabeledVerdict> verdicts);

}  // namespace spectrack
