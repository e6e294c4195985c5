#include "roomgraph/lookup.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

namespace roomgraph {
namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<EmbeddingVector> kmeans_representatives(std::span<const EmbeddingVector> views, const LookupParams& params) {
  if (views.empty()) throw Error(Errc::invalid_argument, "no view embeddings to cluster");
  const int k = params.k.value_or(std::min<int>(4, static_cast<int>(views.size())));
  if (k < 1) throw Error(Errc::invalid_argument, "K must be at least 1");
  if (static_cast<std::size_t>(k) > views.size()) {
    throw Error(Errc::invalid_argument, "K = " + std::to_string(k) + " exceeds the " + std::to_string(views.size()) + " view embeddings");
  }
  if (params.max_iters < 1) throw Error(Errc::invalid_argument, "max_iters must be at least 1");
  const std::size_t n = views.size(), dim = views.front().dim();
  for (const auto& v : views) {
    if (v.dim() != dim) throw Error(Errc::invalid_argument, "embedding dimensions differ");
  }

  std::mt19937_64 rng(params.seed);
  std::vector<std::vector<double>> centroids;
  std::vector<std::uint8_t> chosen(n, 0);
  const std::size_t first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  centroids.push_back(views[std::min(first, n - 1)].values());
  chosen[std::min(first, n - 1)] = 1;
  std::vector<double> nearest(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, squared_distance(views[p].values(), c));
      nearest[p] = chosen[p] ? 0.0 : best;
      total += nearest[p];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t p = 0; p < n; ++p) {
        if (nearest[p] <= 0.0) continue;
        pick = p;
        if (target < nearest[p]) break;
        target -= nearest[p];
      }
    } else {
      // Remaining points coincide with chosen centroids.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    chosen[pick] = 1;
    centroids.push_back(views[pick].values());
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < n; ++p) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = squared_distance(views[p].values(), centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[p] != best) {
        assign[p] = best;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t p = 0; p < n; ++p) {
      ++counts[assign[p]];
      for (std::size_t d = 0; d < dim; ++d) sums[assign[p]][d] += views[p][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed with the point farthest from its current centroid.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t p = 0; p < n; ++p) {
          const double d = squared_distance(views[p].values(), centroids[assign[p]]);
          if (d > far_d) {
            far_d = d;
            far = p;
          }
        }
        centroids[c] = views[far].values();
        assign[far] = c;
        changed = true;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    if (!changed && iter > 0) break;
  }

  std::vector<EmbeddingVector> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    double sq = 0.0;
    for (double x : centroids[c]) sq += x * x;
    if (sq > 1e-24) {
      out.push_back(EmbeddingVector::normalized(centroids[c]));
      continue;
    }
    // Antipodal members cancelled out; fall back to the member nearest the mean.
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n; ++p) {
      if (assign[p] != c) continue;
      const double d = squared_distance(views[p].values(), centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    out.push_back(views[best == n ? 0 : best]);
  }
  return out;
}

RoomLabelResult classify_room(std::span<const EmbeddingVector> representatives,
                              std::span<const std::string> categories, const EmbeddingBackend& backend) {
  if (categories.empty()) throw Error(Errc::invalid_argument, "no room categories given");
  if (representatives.empty()) throw Error(Errc::invalid_argument, "no representative embeddings given");
  RoomLabelResult result;
  const std::set<std::string> unique(categories.begin(), categories.end());
  result.categories.assign(unique.begin(), unique.end());
  std::vector<EmbeddingVector> text;
  text.reserve(result.categories.size());
  for (const auto& c : result.categories) text.push_back(backend.embed_text(c));
  result.matrix = cosine_similarity_matrix(representatives, text);

  const std::size_t rows = result.matrix.rows, cols = result.matrix.cols;
  for (const auto& c : result.categories) {
    result.votes[c] = 0;
    double sum = 0.0;
    const std::size_t j = static_cast<std::size_t>(&c - result.categories.data());
    for (std::size_t i = 0; i < rows; ++i) sum += result.matrix.at(i, j);
    result.mean_similarity[c] = sum / static_cast<double>(rows);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (result.matrix.at(i, j) > result.matrix.at(i, best)) best = j;
    }
    result.per_view_predictions.push_back(result.categories[best]);
    ++result.votes[result.categories[best]];
  }
  const std::string* winner = nullptr;
  for (const auto& c : result.categories) {
    if (winner == nullptr) {
      winner = &c;
      continue;
    }
    const int v = result.votes[c], wv = result.votes[*winner];
    if (v > wv || (v == wv && result.mean_similarity[c] > result.mean_similarity[*winner])) winner = &c;
  }
  result.label = *winner;
  return result;
}

}  // namespace roomgraph
