#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version in
// roomgraph::kernels and a plain serial version in roomgraph::kernels::serial
// with identical arithmetic; tests require bit-identical output from both and
// bench/bench_kernels.cpp compares their speed.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "roomgraph/geom.hpp"

namespace roomgraph::kernels {

int max_threads();

/// Hash grid over 3D points with cubic buckets of the given edge length.
class PointIndex {
 public:
  PointIndex(std::span<const Vec3> points, double bucket);

  /// Indices j with |p_j - q|^2 <= radius^2, ascending. radius must not
  /// exceed the bucket edge.
  std::vector<std::uint32_t> within(const Vec3& q, double radius) const;

 private:
  struct Key {
    int x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = static_cast<std::uint32_t>(k.x);
      h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.y);
      h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.z);
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };
  Key key(const Vec3& p) const;

  std::span<const Vec3> points_;
  double bucket_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> buckets_;
};

inline bool within_radius(const Vec3& a, const Vec3& b, double radius) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz <= radius * radius;
}

/// Per-cell counts; every point must lie inside the footprint.
std::vector<std::uint32_t> project_counts(std::span<const Vec3> points, const GridSpec& spec);

/// Binary erosion with a disk of `radius_cells`; cells beyond the raster
/// edge count as background.
std::vector<std::uint8_t> erode_disk(std::span<const std::uint8_t> mask, int width,
                                     int height, double radius_cells);

/// Squared Euclidean distance (in cells) from each cell to the nearest cell
/// with features[k] != 0; kNoFeature where there is none.
inline constexpr double kNoFeature = 1e20;
std::vector<double> squared_edt(std::span<const std::uint8_t> features, int width, int height);

/// Row-major a (rows_a x dim) times b^T (rows_b x dim).
std::vector<double> dot_matrix(std::span<const double> a, std::size_t rows_a,
                               std::span<const double> b, std::size_t rows_b, std::size_t dim);

/// For each point, the ascending list of points within `radius` (self included).
std::vector<std::vector<std::uint32_t>> radius_neighbors(std::span<const Vec3> points,
                                                         double radius);

/// Histogram of all pairwise distances over [0, max_distance]; larger
/// distances land in the last bin.
std::vector<std::uint64_t> distance_histogram(std::span<const Vec3> points, int bins,
                                              double max_distance);

namespace serial {

std::vector<std::uint32_t> project_counts(std::span<const Vec3> points, const GridSpec& spec);
std::vector<std::uint8_t> erode_disk(std::span<const std::uint8_t> mask, int width,
                                     int height, double radius_cells);
std::vector<double> squared_edt(std::span<const std::uint8_t> features, int width, int height);
std::vector<double> dot_matrix(std::span<const double> a, std::size_t rows_a,
                               std::span<const double> b, std::size_t rows_b, std::size_t dim);
std::vector<std::vector<std::uint32_t>> radius_neighbors(std::span<const Vec3> points,
                                                         double radius);
std::vector<std::uint64_t> distance_histogram(std::span<const Vec3> points, int bins,
                                              double max_distance);

}  // namespace serial
}  // namespace roomgraph::kernels
