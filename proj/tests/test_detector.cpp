#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spectrack/detector.hpp"
#include "spectrack/error.hpp"

using namespace spectrack;

namespace {

Csdd random_csdd(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index classes) {
  Csdd c;
  c.matrix = oracle::random_matrix(rng, rows, classes, 0.05, 0.3);
  c.layer_id = "probe";
  for (Eigen::Index i = 0; i < rows; ++i) c.split_seeds.push_back(static_cast<std::uint64_t>(i + 1));
  return c;
}

ActivationDump shifted(const ActivationDump& d, double shift) {
  ActivationDump out(d.layer_id(), d.num_classes(), d.dim());
  std::vector<double> row(d.dim());
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto v = d.preactivations(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = v[j] + shift;
    out.add_record(d.predicted_class(r), row);
  }
  return out;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::IoError;
}

}  // namespace

TEST(Reference, MatchesStatsOracles) {
  std::mt19937_64 rng(1);
  const Csdd c = random_csdd(rng, 15, 10);
  const auto ref = fit_reference(c);
  const auto want = oracle::ledoit_wolf(c.matrix);
  EXPECT_LE((ref.covariance - want.covariance).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((ref.mean - c.matrix.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Reference, ScalarCsdd) {
  Csdd c;
  c.matrix = (Eigen::MatrixXd(3, 1) << 1.0, 2.0, 3.0).finished();
  c.split_seeds = {1, 2, 3};
  const auto ref = fit_reference(c);
  EXPECT_NEAR(ref.covariance(0, 0), 2.0 / 3.0, 1e-15);
}

TEST(Detector, IdenticalRowsNeedJitterAndWarn) {
  Csdd c;
  c.matrix = Eigen::MatrixXd::Constant(4, 2, 0.1);
  c.split_seeds = {1, 2, 3, 4};
  c.layer_id = "probe";
  std::mt19937_64 rng(2);
  const auto d = oracle::random_dump(rng, 2, 4, 30);
  const Detector det(c);
  EXPECT_TRUE(det.reference().covariance.isZero(0.0));
  const auto v = det.detect(d, d);
  EXPECT_FALSE(v.warnings.empty());
  EXPECT_EQ(v.decision, Decision::Poisoned);
}

TEST(Detector, ZeroChangeUpdateScoresMeanDistance) {
  std::mt19937_64 rng(3);
  const Csdd c = random_csdd(rng, 15, 4);
  const auto d = oracle::random_dump(rng, 4, 6, 80);
  const Detector det(c);
  const auto v = det.detect(d, d);
  const auto& ref = det.reference();
  EXPECT_NEAR(v.mahalanobis_sq, oracle::mahalanobis_sq(Eigen::VectorXd::Zero(4), ref.mean, ref.covariance), 1e-8);
  EXPECT_EQ(v.decision, v.mahalanobis_sq > v.threshold ? Decision::Poisoned : Decision::Clean);
}

TEST(Detector, ThresholdAndDefaults) {
  std::mt19937_64 rng(4);
  const Csdd c = random_csdd(rng, 15, 10);
  const auto d = oracle::random_dump(rng, 10, 6, 100);
  const auto v = detect(d, d, c);
  EXPECT_EQ(v.alpha, 0.999);
  EXPECT_NEAR(v.threshold, 29.588, 5e-3);
  EXPECT_EQ(v.threshold, stats::chi2_quantile(10, 0.999));
}

TEST(Detector, DistanceAtMeanIsCleanForAnyAlpha) {
  // A two-row CSDD whose mean equals the distance vector of a hand-built pair.
  ActivationDump a("probe", 1, 2), b("probe", 1, 2);
  const std::vector<double> ra{1.0, 0.0}, rb{-1.0, 0.0};
  a.add_record(0, ra);
  b.add_record(0, rb);
  const double dist = class_distance_vector(a, b, 4).values[0];
  Csdd c;
  c.matrix = (Eigen::MatrixXd(2, 1) << dist - 0.1, dist + 0.1).finished();
  c.split_seeds = {1, 2};
  c.layer_id = "probe";
  const Detector det(c);
  for (double alpha : {0.01, 0.5, 0.999}) {
    const auto v = det.detect(a, b, alpha);
    EXPECT_NEAR(v.mahalanobis_sq, 0.0, 1e-20);
    EXPECT_EQ(v.decision, Decision::Clean);
  }
}

TEST(Detector, ScalarReferenceByHand) {
  // C = 1 with rows 0 and 2: mean 1, biased variance 1.
  Csdd c;
  c.matrix = (Eigen::MatrixXd(2, 1) << 0.0, 2.0).finished();
  c.split_seeds = {1, 2};
  c.layer_id = "probe";
  const Detector det(c);
  ActivationDump a("probe", 1, 1), b("probe", 1, 1);
  const std::vector<double> one{1.0}, minus{-1.0};
  a.add_record(0, one);
  b.add_record(0, minus);
  const auto v = det.detect(a, b, 0.5);
  // Point masses at opposite ends: x = sqrt 2.
  EXPECT_NEAR(v.mahalanobis_sq, std::pow(std::sqrt(2.0) - 1.0, 2), 1e-12);
  EXPECT_EQ(v.decision, v.mahalanobis_sq > v.threshold ? Decision::Poisoned : Decision::Clean);
}

TEST(Detector, MonotoneInAlpha) {
  std::mt19937_64 rng(5);
  const Csdd c = random_csdd(rng, 15, 4);
  const Detector det(c);
  for (int t = 0; t < 20; ++t) {
    const auto d = oracle::random_dump(rng, 4, 5, 60);
    const auto e = shifted(d, 0.02 * t);
    bool was_clean = false;
    for (double alpha : {0.5, 0.9, 0.99, 0.999, 0.99999}) {
      const bool clean = det.detect(d, e, alpha).decision == Decision::Clean;
      if (was_clean) EXPECT_TRUE(clean);
      was_clean = clean;
    }
  }
}

TEST(Detector, ScaleInvariantVerdict) {
  std::mt19937_64 rng(6);
  const Csdd c = random_csdd(rng, 15, 3);
  const Detector det(c);
  const auto d = oracle::random_dump(rng, 3, 8, 90);
  const auto e = shifted(d, 0.3);
  const auto base = det.detect(d, e);
  for (double k : {0.001, 0.37, 3.0, 1234.5}) {
    const auto v = det.detect(d.scaled(k), e.scaled(1.0 / k));
    EXPECT_EQ(v.mahalanobis_sq, base.mahalanobis_sq);
    EXPECT_EQ(v.decision, base.decision);
  }
}

TEST(Detector, ClassPermutationInvariant) {
  std::mt19937_64 rng(7);
  const Csdd c = random_csdd(rng, 15, 4);
  const auto d = oracle::random_dump(rng, 4, 6, 80);
  const auto e = shifted(d, 0.4);
  const std::vector<std::uint32_t> perm{2, 0, 3, 1};
  auto relabel = [&](const ActivationDump& x) {
    ActivationDump out(x.layer_id(), 4, x.dim());
    for (std::size_t r = 0; r < x.size(); ++r) out.add_record(perm[x.predicted_class(r)], x.preactivations(r));
    return out;
  };
  Csdd pc = c;
  for (std::uint32_t k = 0; k < 4; ++k) pc.matrix.col(perm[k]) = c.matrix.col(k);
  const auto a = Detector(c).detect(d, e);
  const auto b = Detector(pc).detect(relabel(d), relabel(e));
  EXPECT_NEAR(a.mahalanobis_sq, b.mahalanobis_sq, 1e-9 * std::max(1.0, a.mahalanobis_sq));
  EXPECT_EQ(a.decision, b.decision);
}

TEST(Detector, ConfigMismatches) {
  std::mt19937_64 rng(8);
  const Detector det(random_csdd(rng, 15, 3));
  const auto d3 = oracle::random_dump(rng, 3, 4, 20);
  const auto d4 = oracle::random_dump(rng, 4, 4, 20);
  const auto wide = oracle::random_dump(rng, 3, 5, 20);
  ActivationDump other_layer("elsewhere", 3, 4);
  other_layer.add_record(0, d3.preactivations(0));
  EXPECT_EQ(kind_of([&] { det.detect(d3, d4); }), ErrorKind::ConfigMismatch);
  EXPECT_EQ(kind_of([&] { det.detect(d3, wide); }), ErrorKind::ConfigMismatch);
  EXPECT_EQ(kind_of([&] { det.detect(d3, other_layer); }), ErrorKind::ConfigMismatch);
}

TEST(Detector, RecordsProbeDataset) {
  std::mt19937_64 rng(9);
  const Detector det(random_csdd(rng, 15, 2));
  const auto d = oracle::random_dump(rng, 2, 4, 20);
  EXPECT_EQ(det.detect(d, d, 0.999, "D_c").probe_dataset, "D_c");
}

TEST(Evaluate, ConfusionTallies) {
  auto make = [](int tp, int fp, int fn, int tn) {
    std::vector<LabeledVerdict> v;
    auto push = [&](int n, Decision d, GroundTruth t) {
      for (int i = 0; i < n; ++i) {
        LabeledVerdict lv;
        lv.verdict.decision = d;
        lv.truth = t;
        v.push_back(lv);
      }
    };
    push(tp, Decision::Poisoned, GroundTruth::Trojaned);
    push(fp, Decision::Poisoned, GroundTruth::Clean);
    push(fn, Decision::Clean, GroundTruth::Trojaned);
    push(tn, Decision::Clean, GroundTruth::Clean);
    return evaluate_detector(v);
  };
  const auto full = make(10, 0, 0, 10);
  EXPECT_EQ(full.accuracy, 1.0);
  EXPECT_EQ(full.counts, (stats::ConfusionCounts{10, 0, 0, 10}));
  const auto sig = make(7, 0, 3, 10);
  EXPECT_EQ(sig.accuracy, 0.85);
  EXPECT_EQ(sig.counts.fn, 3u);
  EXPECT_THROW(evaluate_detector({}), Error);
}
