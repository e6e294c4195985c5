#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roomgraph/embedding.hpp"
#include "roomgraph/geom.hpp"

namespace roomgraph {

struct Box3 {
  Vec3 center;
  Vec3 size;
  double yaw = 0.0;  // rotation about +z, radians

  /// Enclosing axis-aligned box (exact for yaw = 0).
  Aabb3 aabb() const;
  bool contains(const Vec3& p) const;
  /// Throws Errc::invalid_argument unless every size component is positive.
  void validate() const;
  static Box3 from_aabb(const Aabb3& box);
};

struct Detection {
  Box3 box;
  double score = 1.0;  // [0, 1]
};

struct BoxDetectParams {
  double plane_margin = 0.05;    // floor/ceiling band half-width around the 1st/99th z percentiles
  double plane_coverage = 0.3;   // a band counts as a plane when it covers this share of the occupied xy cells
  double link_radius = 0.10;     // single-linkage distance
  int min_pts = 10;
  double min_extent = 0.05;      // required on at least two axes
  double pad = 0.02;
  void validate() const;
};

/// Swappable class-agnostic box proposer.
class ObjectDetector {
 public:
  virtual ~ObjectDetector() = default;
  virtual std::vector<Detection> detect(const PointCloud& room_cloud, const BinaryGrid* wall_mask) const = 0;
};

/// Plane removal followed by single-linkage clustering. Floor and ceiling
/// bands are only stripped when they look like planes (see plane_coverage),
/// so a cloud without a ceiling keeps the tops of its objects. Boxes of
/// clusters resting on a stripped floor extend down to the floor level.
class ClusterBoxDetector final : public ObjectDetector {
 public:
  explicit ClusterBoxDetector(BoxDetectParams params = {}) : params_(params) {}
  std::vector<Detection> detect(const PointCloud& room_cloud, const BinaryGrid* wall_mask) const override;

 private:
  BoxDetectParams params_;
};

std::vector<Detection> detect_boxes(const PointCloud& room_cloud, const BoxDetectParams& params = {},
                                    const BinaryGrid* wall_mask = nullptr);

struct DbscanParams {
  double eps = 0.08;
  int min_pts = 10;  // neighbourhood size including the point itself
  int n = 1024;      // output point count
  void validate() const;
};

struct DbscanResult {
  std::vector<int> labels;          // cluster id or kNoise
  std::vector<std::uint8_t> core;
  int clusters = 0;
  static constexpr int kNoise = -1;
};

/// Cluster ids follow the smallest core index of each cluster; a border
/// point joins the lowest-id cluster among its core neighbours. This is the
/// labelling produced by the classic sequential algorithm.
DbscanResult dbscan(std::span<const Vec3> points, double eps, int min_pts);

struct ObjectPoints {
  std::vector<Vec3> points;
  bool normalized = false;
};

/// Crop to the box, keep the largest DBSCAN cluster (ties: centroid nearest
/// the box center, then lower id; no cluster: keep the whole crop) and
/// resample to exactly params.n points with a generator seeded by `seed`.
/// Throws Errc::invalid_argument if the box holds no points.
ObjectPoints filter_object_points(const PointCloud& room_cloud, const Box3& box, const DbscanParams& params,
                                  std::uint64_t seed);

/// Order-preserving resample to n points: subsample without replacement when
/// there are more, all points plus draws with replacement when fewer.
std::vector<Vec3> resample_points(std::span<const Vec3> points, int n, std::uint64_t seed);

/// Centroid to the origin, farthest point at unit distance.
ObjectPoints normalize_points(std::span<const Vec3> points);

struct ObjectLabel {
  std::string label;
  std::vector<std::pair<std::string, double>> ranked;  // descending cosine, ties by name
};

ObjectLabel classify_object(const ObjectPoints& obj, std::span<const std::string> categories,
                            const EmbeddingBackend& backend);

}  // namespace roomgraph
