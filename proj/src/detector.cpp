#include "spectrack/detector.hpp"

#include "spectrack/error.hpp"

namespace spectrack {

std::string_view to_string(Decision d) noexcept { return d == Decision::Poisoned ? "Poisoned" : "Clean"; }

stats::GaussianReference fit_reference(const Csdd& csdd) {
  if (csdd.rows() < 2) fail(ErrorKind::InsufficientSamples, "CSDD needs at least 2 rows to fit a reference");
  return stats::ledoit_wolf(csdd.matrix);
}

Detector::Detector(Csdd csdd) : csdd_(std::move(csdd)) {
  csdd_.validate();
  reference_ = fit_reference(csdd_);
  if (reference_.covariance.isZero(0.0)) {
    reference_warnings_.push_back("CSDD rows are identical; reference covariance is zero");
  }
}

DetectionVerdict Detector::detect(const ActivationDump& dump_prev, const ActivationDump& dump_new, double alpha,
                                  std::string probe_dataset) const {
  const std::size_t classes = csdd_.num_classes();
  for (const ActivationDump* dump : {&dump_prev, &dump_new}) {
    if (dump->num_classes() != classes) {
      fail(ErrorKind::ConfigMismatch, "dump has " + std::to_string(dump->num_classes()) + " classes, CSDD has " +
                                          std::to_string(classes));
    }
    if (dump->layer_id() != csdd_.layer_id) {
      fail(ErrorKind::ConfigMismatch, "dump layer '" + dump->layer_id() + "' differs from CSDD layer '" +
                                          csdd_.layer_id + "'");
    }
  }
  if (dump_prev.dim() != dump_new.dim()) {
    fail(ErrorKind::ConfigMismatch, "dumps have different pre-activation widths");
  }

  DetectionVerdict verdict;
  verdict.alpha = alpha;
  verdict.threshold = stats::chi2_quantile(static_cast<unsigned>(classes), alpha);
  verdict.probe_dataset = std::move(probe_dataset);
  verdict.distance_vector = class_distance_vector(dump_prev, dump_new, csdd_.num_bins, {"prev", "new"});
  verdict.warnings = reference_warnings_;
  verdict.warnings.insert(verdict.warnings.end(), verdict.distance_vector.warnings.begin(),
                          verdict.distance_vector.warnings.end());

  const Eigen::Map<const Eigen::VectorXd> x(verdict.distance_vector.values.data(),
                                            static_cast<Eigen::Index>(verdict.distance_vector.values.size()));
  const auto md = stats::mahalanobis_sq_detailed(x, reference_);
  if (md.jittered) verdict.warnings.push_back("reference covariance needed diagonal jitter");
  verdict.mahalanobis_sq = md.value;
  verdict.decision = md.value > verdict.threshold ? Decision::Poisoned : Decision::Clean;
  return verdict;
}

DetectionVerdict detect(const ActivationDump& dump_prev, const ActivationDump& dump_new, const Csdd& csdd, double alpha) {
  return Detector(csdd).detect(dump_prev, dump_new, alpha);
}

Evaluation evaluate_detector(std::span<const LabeledVerdict> verdicts) {
  if (verdicts.empty()) fail(ErrorKind::InvalidInput, "no verdicts to evaluate");
  Evaluation out;
  for (const auto& [verdict, truth] : verdicts) {
    const bool flagged = verdict.decision == Decision::Poisoned;
    const bool trojaned = truth == GroundTruth::Trojaned;
    if (flagged && trojaned) ++out.counts.tp;
    else if (flagged) ++out.counts.fp;
    else if (trojaned) ++out.counts.fn;
    else ++out.counts.tn;
  }
  out.accuracy = out.counts.accuracy();
  return out;
}

}  // namespace spectrack
