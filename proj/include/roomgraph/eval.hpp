#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roomgraph/objects.hpp"

namespace roomgraph {

/// |a ∩ b| / |a ∪ b| over ascending cell index lists; 0 when both are empty.
double mask_iou(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

/// Intersection volume over union volume of the boxes' enclosing AABBs.
double box_iou(const Box3& a, const Box3& b);

struct MatchResult {
  std::vector<std::size_t> order;   // prediction indices, confidence descending (ties by index)
  std::vector<std::uint8_t> tp;     // per prediction index
  std::vector<int> gt_match;        // matching prediction per ground truth, -1 if none
  std::vector<double> iou;          // per prediction: IoU with its matched ground truth, else 0
};

/// Predictions in confidence order each take the unmatched ground truth of
/// highest IoU (ties to the lower index) when that IoU reaches `threshold`.
/// iou is row-major predictions x ground truths.
MatchResult greedy_match(const std::vector<double>& iou, std::size_t num_pred, std::size_t num_gt,
                         const std::vector<double>& confidence, double threshold);

/// All-point interpolated area under the precision/recall curve of the
/// ranked true-positive flags; 0 when num_gt is 0.
double average_precision(const std::vector<std::uint8_t>& ranked_tp, std::size_t num_gt);

/// Mean over ground truths of the IoU in a one-to-one assignment maximizing
/// total IoU. Exact (subset dynamic programming) while the smaller side has
/// at most 16 members, greedy by descending IoU beyond that.
double optimal_mean_iou(const std::vector<double>& iou, std::size_t num_pred, std::size_t num_gt);

struct ScoredMask {
  int id = 0;
  std::vector<std::size_t> cells;
  double confidence = 1.0;
};

struct SegmentationMetrics {
  double ap50 = 0.0;
  double miou = 0.0;
  MatchResult match;
};

/// Predictions are ordered by id before matching; indices in the returned
/// match refer to that order.
SegmentationMetrics segmentation_metrics(const std::vector<ScoredMask>& predictions,
                                         const std::vector<std::vector<std::size_t>>& ground_truth,
                                         double iou_threshold = 0.5);

struct ScoredBox {
  Box3 box;
  double score = 1.0;
};

struct DetectionMetrics {
  std::map<std::string, double> per_class;  // classes with at least one ground truth
  double mean = 0.0;
};

DetectionMetrics detection_ap(const std::map<std::string, std::vector<ScoredBox>>& predictions,
                              const std::map<std::string, std::vector<Box3>>& ground_truth, double iou_threshold);

struct LabelPrediction {
  std::string label;
  double confidence = 1.0;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  double precision = 0.0;  // weighted by ground-truth support
  double recall = 0.0;
  double f1 = 0.0;
  double map = 0.0;             // mean one-vs-rest AP over classes with support
  double macro_accuracy = 0.0;  // mean per-class recall over classes with support
  std::map<std::string, ClassScores> per_class;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // truth -> predicted -> count
};

/// For class c, the retrieved list is the items predicted as c ranked by
/// confidence; an item is relevant when its truth is c.
ClassificationReport classification_report(const std::vector<LabelPrediction>& predictions,
                                           const std::vector<std::string>& truth);

}  // namespace roomgraph
