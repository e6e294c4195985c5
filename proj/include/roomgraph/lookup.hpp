#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomgraph/embedding.hpp"

namespace roomgraph {

struct LookupParams {
  std::optional<int> k;  // default min(4, number of views)
  int max_iters = 50;
  std::uint64_t seed = 0;
};

/// Lloyd's k-means on unit vectors (Euclidean distance) with k-means++
/// seeding drawn from `seed`; empty clusters are re-seeded with the point
/// farthest from its centroid. Centroids are returned renormalized.
/// Throws Errc::invalid_argument when k is 0 or exceeds the input count.
std::vector<EmbeddingVector> kmeans_representatives(std::span<const EmbeddingVector> views, const LookupParams& params);

struct RoomLabelResult {
  std::string label;
  std::map<std::string, int> votes;
  std::map<std::string, double> mean_similarity;
  std::vector<std::string> per_view_predictions;  // one per representative
  std::vector<std::string> categories;            // deduplicated, sorted
  SimilarityMatrix matrix;                        // representatives x categories
};

/// Row argmax over categories (ties to the lexicographically smaller name),
/// then majority vote; vote ties go to the higher mean cosine, then to the
/// lexicographically smaller name.
RoomLabelResult classify_room(std::span<const EmbeddingVector> representatives,
                              std::span<const std::string> categories, const EmbeddingBackend& backend);

}  // namespace roomgraph
