#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "roomgraph/eval.hpp"

using namespace roomgraph;

namespace {

Box3 cube(double x, double y, double z, double s = 1.0) { return {{x, y, z}, {s, s, s}, 0.0}; }

std::vector<std::size_t> range_cells(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v;
  for (std::size_t k = a; k < b; ++k) v.push_back(k);
  return v;
}

}  // namespace

TEST(MaskIou, DisjointIdenticalAndPartial) {
  EXPECT_DOUBLE_EQ(mask_iou(range_cells(0, 10), range_cells(10, 20)), 0.0);
  EXPECT_DOUBLE_EQ(mask_iou(range_cells(0, 10), range_cells(0, 10)), 1.0);
  EXPECT_DOUBLE_EQ(mask_iou(range_cells(0, 10), range_cells(5, 15)), 5.0 / 15.0);
  EXPECT_DOUBLE_EQ(mask_iou({}, {}), 0.0);
}

TEST(BoxIou, HalfOverlappingUnitCubesGiveOneThird) {
  EXPECT_NEAR(box_iou(cube(0, 0, 0), cube(0.5, 0, 0)), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(box_iou(cube(0, 0, 0), cube(3, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(box_iou(cube(1, 2, 3, 2), cube(1, 2, 3, 2)), 1.0);
}

TEST(BoxIou, RejectsNonPositiveSizes) {
  Box3 bad{{0, 0, 0}, {1, 0, 1}, 0};
  EXPECT_THROW(box_iou(bad, cube(0, 0, 0)), Error);
}

TEST(AveragePrecision, KnownRankings) {
  EXPECT_DOUBLE_EQ(average_precision({1, 1, 1}, 3), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({0, 0}, 2), 0.0);
  // TP, FP, TP with 2 GT: precision envelope 1, 2/3.
  EXPECT_NEAR(average_precision({1, 0, 1}, 2), 0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(average_precision({1}, 0), 0.0);
}

TEST(SegmentationMetrics, IdenticalAndEmptyPredictions) {
  std::vector<std::vector<std::size_t>> gt{range_cells(0, 10), range_cells(20, 30)};
  std::vector<ScoredMask> same{{0, gt[0], 1.0}, {1, gt[1], 0.5}};
  const auto m = segmentation_metrics(same, gt);
  EXPECT_DOUBLE_EQ(m.ap50, 1.0);
  EXPECT_DOUBLE_EQ(m.miou, 1.0);
  const auto none = segmentation_metrics({}, gt);
  EXPECT_DOUBLE_EQ(none.ap50, 0.0);
  EXPECT_DOUBLE_EQ(none.miou, 0.0);
}

TEST(SegmentationMetrics, MatchesExhaustiveOracleOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> count(0, 6), lo(0, 80), len(1, 30);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    const int np = count(rng), ng = count(rng);
    std::vector<ScoredMask> preds;
    std::vector<std::vector<std::size_t>> gt;
    for (int p = 0; p < np; ++p) {
      const int a = lo(rng);
      // Coarse confidences make ties common.
      preds.push_back({p, range_cells(a, a + len(rng)), std::round(conf(rng) * 4.0) / 4.0});
    }
    for (int g = 0; g < ng; ++g) {
      const int a = lo(rng);
      gt.push_back(range_cells(a, a + len(rng)));
    }
    std::vector<double> iou(np * ng), c(np);
    for (int p = 0; p < np; ++p) {
      c[p] = preds[p].confidence;
      for (int g = 0; g < ng; ++g) iou[p * ng + g] = mask_iou(preds[p].cells, gt[g]);
    }
    const auto m = segmentation_metrics(preds, gt, 0.5);
    EXPECT_NEAR(m.miou, oracle::brute_mean_iou(iou, np, ng), 1e-9) << "trial " << trial;
    EXPECT_NEAR(m.ap50, oracle::brute_ap(iou, np, ng, c, 0.5), 1e-9) << "trial " << trial;
  }
}

TEST(DetectionAp, MatchesExhaustiveOracleOnRandomInstances) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_real_distribution<double> pos(0.0, 2.0), size(0.3, 1.2), score(0.0, 1.0);
    std::map<std::string, std::vector<ScoredBox>> preds;
    std::map<std::string, std::vector<Box3>> gts;
    const int np = count(rng), ng = count(rng);
    for (int p = 0; p < np; ++p) preds["a"].push_back({cube(pos(rng), pos(rng), pos(rng), size(rng)), score(rng)});
    for (int g = 0; g < ng; ++g) gts["a"].push_back(cube(pos(rng), pos(rng), pos(rng), size(rng)));
    const auto r = detection_ap(preds, gts, 0.25);
    if (ng == 0) {
      EXPECT_TRUE(r.per_class.empty());
      continue;
    }
    std::vector<double> iou(np * ng), c(np);
    for (int p = 0; p < np; ++p) {
      c[p] = preds["a"][p].score;
      for (int g = 0; g < ng; ++g) iou[p * ng + g] = box_iou(preds["a"][p].box, gts["a"][g]);
    }
    EXPECT_NEAR(r.per_class.at("a"), oracle::brute_ap(iou, np, ng, c, 0.25), 1e-9) << "trial " << trial;
  }
}

TEST(DetectionAp, PerfectAndBelowThreshold) {
  std::map<std::string, std::vector<Box3>> gt{{"a", {cube(0, 0, 0)}}, {"b", {cube(5, 5, 5)}}};
  std::map<std::string, std::vector<ScoredBox>> perfect{{"a", {{cube(0, 0, 0), 1.0}}}, {"b", {{cube(5, 5, 5), 0.3}}}};
  EXPECT_DOUBLE_EQ(detection_ap(perfect, gt, 0.5).mean, 1.0);
  // IoU of a cube shifted by 0.6 is 0.4/1.6 = 0.25 < 0.5.
  std::map<std::string, std::vector<ScoredBox>> shifted{{"a", {{cube(0.6, 0, 0), 1.0}}}};
  const auto r = detection_ap(shifted, gt, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class.at("a"), 0.0);
  EXPECT_DOUBLE_EQ(r.per_class.at("b"), 0.0);
}

TEST(Metrics, ApIsInvariantToMonotoneConfidenceRescaling) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<std::string, std::vector<Box3>> gt;
  std::map<std::string, std::vector<ScoredBox>> a, b;
  for (int k = 0; k < 5; ++k) gt["x"].push_back(cube(2.0 * k, 0, 0));
  for (int k = 0; k < 7; ++k) {
    const Box3 box = cube(2.0 * (k % 5) + 0.3 * u(rng), 0, 0);
    const double s = u(rng);
    a["x"].push_back({box, s});
    b["x"].push_back({box, 3.0 * s * s + 1.0});
  }
  EXPECT_DOUBLE_EQ(detection_ap(a, gt, 0.5).mean, detection_ap(b, gt, 0.5).mean);
}

TEST(Metrics, AddingFalsePositiveNeverIncreasesAp) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, std::vector<Box3>> gt;
    std::map<std::string, std::vector<ScoredBox>> preds;
    for (int k = 0; k < 4; ++k) gt["x"].push_back(cube(3.0 * k, 0, 0));
    for (int k = 0; k < 4; ++k) preds["x"].push_back({cube(3.0 * k + 0.4 * u(rng), 0, 0), u(rng)});
    const double before = detection_ap(preds, gt, 0.5).mean;
    preds["x"].push_back({cube(100, 100, 100), u(rng)});
    EXPECT_LE(detection_ap(preds, gt, 0.5).mean, before + 1e-12);
  }
}

TEST(Metrics, AddingUnmatchedGroundTruthNeverIncreasesMeanIou) {
  std::vector<std::vector<std::size_t>> gt{range_cells(0, 10), range_cells(20, 30)};
  std::vector<ScoredMask> preds{{0, range_cells(0, 8), 1.0}, {1, range_cells(22, 30), 1.0}};
  const double before = segmentation_metrics(preds, gt).miou;
  gt.push_back(range_cells(100, 120));
  EXPECT_LE(segmentation_metrics(preds, gt).miou, before);
}

TEST(ClassificationReport, HandComputedConfusionMatrix) {
  // Truth a a b b c c, predicted a a a b c c ->
  // confusion [[2,0,0],[1,1,0],[0,0,2]].
  std::vector<std::string> truth{"a", "a", "b", "b", "c", "c"};
  std::vector<LabelPrediction> pred{{"a", 0.9}, {"a", 0.8}, {"a", 0.7}, {"b", 0.6}, {"c", 0.5}, {"c", 0.4}};
  const auto r = classification_report(pred, truth);
  // Per class: a P=2/3 R=1 F1=0.8; b P=1 R=1/2 F1=2/3; c P=R=F1=1.
  EXPECT_NEAR(r.per_class.at("a").precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class.at("b").recall, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class.at("a").f1, 0.8, 1e-12);
  EXPECT_NEAR(r.per_class.at("b").f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.precision, (2.0 / 3.0 + 1.0 + 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(r.recall, (1.0 + 0.5 + 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(r.f1, (0.8 + 2.0 / 3.0 + 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(r.macro_accuracy, (1.0 + 0.5 + 1.0) / 3.0, 1e-12);
  // AP for a: ranked [T, T, F] -> 1; b: [T] with 2 GT -> 0.5; c: 1.
  EXPECT_NEAR(r.map, (1.0 + 0.5 + 1.0) / 3.0, 1e-12);
  EXPECT_EQ(r.confusion.at("b").at("a"), 1u);
  EXPECT_EQ(r.confusion.at("a").at("a"), 2u);
}

TEST(ClassificationReport, PerClassF1IsHarmonicMean) {
  std::mt19937_64 rng(15);
  const std::vector<std::string> names{"p", "q", "r", "s"};
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> truth;
    std::vector<LabelPrediction> pred;
    for (int k = 0; k < 20; ++k) {
      truth.push_back(names[pick(rng)]);
      pred.push_back({names[pick(rng)], u(rng)});
    }
    const auto r = classification_report(pred, truth);
    for (const auto& [c, s] : r.per_class) {
      const double expect = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
      EXPECT_NEAR(s.f1, expect, 1e-12);
      EXPECT_GE(s.f1, 0.0);
      EXPECT_LE(s.f1, 1.0);
    }
    EXPECT_GE(r.map, 0.0);
    EXPECT_LE(r.map, 1.0);
  }
}

TEST(ClassificationReport, AllCorrectAndErrors) {
  const auto r = classification_report({{"a", 1}, {"b", 1}}, {"a", "b"});
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  EXPECT_THROW(classification_report({{"a", 1}}, {"a", "b"}), Error);
  EXPECT_THROW(classification_report({}, {}), Error);
}

TEST(OptimalMeanIou, GreedyFallbackBeyondSixteen) {
  // Diagonal IoU of 1 for 20 pairs: both exact and greedy give 1.
  const std::size_t n = 20;
  std::vector<double> iou(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) iou[k * n + k] = 1.0;
  EXPECT_DOUBLE_EQ(optimal_mean_iou(iou, n, n), 1.0);
}
