#include "roomgraph/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

namespace roomgraph {

double mask_iou(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double box_iou(const Box3& a, const Box3& b) {
  a.validate();
  b.validate();
  const Aabb3 x = a.aabb(), y = b.aabb();
  const double ix = std::max(0.0, std::min(x.max.x, y.max.x) - std::max(x.min.x, y.min.x));
  const double iy = std::max(0.0, std::min(x.max.y, y.max.y) - std::max(x.min.y, y.min.y));
  const double iz = std::max(0.0, std::min(x.max.z, y.max.z) - std::max(x.min.z, y.min.z));
  const double inter = ix * iy * iz;
  const Vec3 ex = x.extent(), ey = y.extent();
  const double uni = ex.x * ex.y * ex.z + ey.x * ey.y * ey.z - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

MatchResult greedy_match(const std::vector<double>& iou, std::size_t num_pred, std::size_t num_gt,
                         const std::vector<double>& confidence, double threshold) {
  if (iou.size() != num_pred * num_gt || confidence.size() != num_pred) {
    throw Error(Errc::invalid_argument, "match inputs have inconsistent sizes");
  }
  MatchResult m;
  m.order.resize(num_pred);
  std::iota(m.order.begin(), m.order.end(), 0);
  std::stable_sort(m.order.begin(), m.order.end(), [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });
  m.tp.assign(num_pred, 0);
  m.iou.assign(num_pred, 0.0);
  m.gt_match.assign(num_gt, -1);
  for (std::size_t p : m.order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (m.gt_match[g] >= 0) continue;
      const double v = iou[p * num_gt + g];
      if (v >= threshold && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      m.gt_match[best] = static_cast<int>(p);
      m.tp[p] = 1;
      m.iou[p] = best_iou;
    }
  }
  return m;
}

double average_precision(const std::vector<std::uint8_t>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0 || ranked_tp.empty()) return 0.0;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += ranked_tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t k = n - 1; k-- > 0;) precision[k] = std::max(precision[k], precision[k + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

double optimal_mean_iou(const std::vector<double>& iou, std::size_t num_pred, std::size_t num_gt) {
  if (iou.size() != num_pred * num_gt) throw Error(Errc::invalid_argument, "IoU matrix has the wrong size");
  if (num_gt == 0) return 0.0;
  if (num_pred == 0) return 0.0;
  const bool pred_small = num_pred <= num_gt;
  const std::size_t small = pred_small ? num_pred : num_gt, large = pred_small ? num_gt : num_pred;
  auto at = [&](std::size_t l, std::size_t s) {
    return pred_small ? iou[s * num_gt + l] : iou[l * num_gt + s];
  };
  double total = 0.0;
  if (small <= 16) {
    // best[mask] = max total IoU using the small-side members in mask,
    // after considering a prefix of the large side.
    const std::size_t states = std::size_t{1} << small;
    std::vector<double> best(states, -std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (std::size_t l = 0; l < large; ++l) {
      for (std::size_t mask = states; mask-- > 0;) {
        if (best[mask] == -std::numeric_limits<double>::infinity()) continue;
        for (std::size_t s = 0; s < small; ++s) {
          if (mask & (std::size_t{1} << s)) continue;
          const std::size_t next = mask | (std::size_t{1} << s);
          best[next] = std::max(best[next], best[mask] + at(l, s));
        }
      }
    }
    total = *std::max_element(best.begin(), best.end());
  } else {
    struct Pair {
      double v;
      std::size_t p, g;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < num_pred; ++p) {
      for (std::size_t g = 0; g < num_gt; ++g) pairs.push_back({iou[p * num_gt + g], p, g});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.v > b.v; });
    std::vector<std::uint8_t> used_p(num_pred, 0), used_g(num_gt, 0);
    for (const auto& pr : pairs) {
      if (used_p[pr.p] || used_g[pr.g]) continue;
      used_p[pr.p] = used_g[pr.g] = 1;
      total += pr.v;
    }
  }
  return total / static_cast<double>(num_gt);
}

SegmentationMetrics segmentation_metrics(const std::vector<ScoredMask>& predictions,
                                         const std::vector<std::vector<std::size_t>>& ground_truth, double iou_threshold) {
  // Equal confidences fall back to id order.
  std::vector<ScoredMask> preds = predictions;
  std::stable_sort(preds.begin(), preds.end(), [](const ScoredMask& a, const ScoredMask& b) { return a.id < b.id; });
  const std::size_t np = preds.size(), ng = ground_truth.size();
  std::vector<double> iou(np * ng);
  std::vector<double> conf(np);
  for (std::size_t p = 0; p < np; ++p) {
    conf[p] = preds[p].confidence;
    for (std::size_t g = 0; g < ng; ++g) iou[p * ng + g] = mask_iou(preds[p].cells, ground_truth[g]);
  }
  SegmentationMetrics m;
  m.match = greedy_match(iou, np, ng, conf, iou_threshold);
  std::vector<std::uint8_t> ranked;
  for (std::size_t p : m.match.order) ranked.push_back(m.match.tp[p]);
  m.ap50 = average_precision(ranked, ng);
  m.miou = optimal_mean_iou(iou, np, ng);
  return m;
}

DetectionMetrics detection_ap(const std::map<std::string, std::vector<ScoredBox>>& predictions,
                              const std::map<std::string, std::vector<Box3>>& ground_truth, double iou_threshold) {
  DetectionMetrics out;
  for (const auto& [cls, preds] : predictions) {
    for (const auto& p : preds) p.box.validate();
  }
  for (const auto& [cls, gts] : ground_truth) {
    for (const auto& g : gts) g.validate();
    if (gts.empty()) continue;
    static const std::vector<ScoredBox> kNone;
    const auto it = predictions.find(cls);
    const auto& preds = it == predictions.end() ? kNone : it->second;
    std::vector<double> iou(preds.size() * gts.size()), conf(preds.size());
    for (std::size_t p = 0; p < preds.size(); ++p) {
      conf[p] = preds[p].score;
      for (std::size_t g = 0; g < gts.size(); ++g) iou[p * gts.size() + g] = box_iou(preds[p].box, gts[g]);
    }
    const MatchResult m = greedy_match(iou, preds.size(), gts.size(), conf, iou_threshold);
    std::vector<std::uint8_t> ranked;
    for (std::size_t p : m.order) ranked.push_back(m.tp[p]);
    out.per_class[cls] = average_precision(ranked, gts.size());
  }
  if (!out.per_class.empty()) {
    double sum = 0.0;
    for (const auto& [cls, ap] : out.per_class) sum += ap;
    out.mean = sum / static_cast<double>(out.per_class.size());
  }
  return out;
}

ClassificationReport classification_report(const std::vector<LabelPrediction>& predictions,
                                           const std::vector<std::string>& truth) {
  if (predictions.size() != truth.size()) throw Error(Errc::invalid_argument, "prediction and truth lists differ in length");
  if (truth.empty()) throw Error(Errc::invalid_argument, "classification report needs at least one item");
  ClassificationReport r;
  std::set<std::string> classes(truth.begin(), truth.end());
  for (const auto& p : predictions) classes.insert(p.label);
  for (std::size_t k = 0; k < truth.size(); ++k) ++r.confusion[truth[k]][predictions[k].label];

  std::size_t total_support = 0, supported = 0;
  for (const auto& c : classes) {
    ClassScores s;
    std::size_t tp = 0, predicted = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const bool is_pred = predictions[k].label == c, is_true = truth[k] == c;
      s.support += is_true;
      predicted += is_pred;
      tp += is_pred && is_true;
    }
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = s.support ? static_cast<double>(tp) / static_cast<double>(s.support) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (s.support > 0) {
      std::vector<std::size_t> retrieved;
      for (std::size_t k = 0; k < truth.size(); ++k) {
        if (predictions[k].label == c) retrieved.push_back(k);
      }
      std::stable_sort(retrieved.begin(), retrieved.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a].confidence > predictions[b].confidence;
      });
      std::vector<std::uint8_t> ranked;
      for (std::size_t k : retrieved) ranked.push_back(truth[k] == c);
      s.ap = average_precision(ranked, s.support);
      r.precision += s.precision * static_cast<double>(s.support);
      r.recall += s.recall * static_cast<double>(s.support);
      r.f1 += s.f1 * static_cast<double>(s.support);
      r.map += s.ap;
      r.macro_accuracy += s.recall;
      total_support += s.support;
      ++supported;
    }
    r.per_class[c] = s;
  }
  r.precision /= static_cast<double>(total_support);
  r.recall /= static_cast<double>(total_support);
  r.f1 /= static_cast<double>(total_support);
  r.map /= static_cast<double>(supported);
  r.macro_accuracy /= static_cast<double>(supported);
  return r;
}

}  // namespace roomgraph
