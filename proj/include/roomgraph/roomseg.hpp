#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roomgraph/geom.hpp"

namespace roomgraph {

struct RegionMask {
  int room_id = 0;
  std::vector<std::size_t> cells;  // ascending linear cell indices
  double confidence = 1.0;
};

struct RoomSegmentation {
  GridSpec spec;
  std::vector<RegionMask> masks;
  BinaryGrid wall_mask;

  static constexpr int kUnassigned = -1;
  static constexpr int kWall = -2;

  /// Per-cell room_id, kWall for wall cells, kUnassigned elsewhere.
  std::vector<int> label_raster() const;

  /// Checks non-empty, in-footprint, pairwise disjoint masks that avoid walls.
  void validate() const;
};

/// Swappable region detector operating on the border-enhanced density map.
class RegionDetector {
 public:
  virtual ~RegionDetector() = default;
  virtual RoomSegmentation detect(const ValueGrid& combined) const = 0;
};

struct RegionDetectParams {
  double wall_threshold = 0.15;  // tau_wall
  double seed_distance = 0.6;    // d_seed, meters
  double min_area = 1.5;         // A_min, square meters
  double min_wall_area = 0.5;    // smaller 8-connected wall blobs are treated as free clutter
  void validate() const;
};

/// Distance-transform / wavefront segmenter.
///
///  1. walls are cells with value >= wall_threshold, minus 8-connected wall
///     blobs smaller than min_wall_area (free-standing furniture);
///  2. free space is the non-wall area not connected to the raster edge,
///     clipped to the bounding box of its largest 4-connected component;
///  3. seeds are the 8-connected components of free cells whose clearance is
///     at least seed_distance, so two basins separated by a saddle narrower
///     than 2 * seed_distance stay distinct;
///  4. seeds grow by a level-synchronous 4-neighbour wavefront, equal-time
///     conflicts going to the lower id;
///  5. regions under min_area fold into the neighbour sharing the longest
///     boundary.
class MorphologicalRegionDetector final : public RegionDetector {
 public:
  explicit MorphologicalRegionDetector(RegionDetectParams params = {}) : params_(params) {}
  RoomSegmentation detect(const ValueGrid& combined) const override;

 private:
  RegionDetectParams params_;
};

RoomSegmentation detect_regions(const ValueGrid& combined, const RegionDetectParams& params = {});

/// Room r receives exactly the points whose xy cell lies in mask r; output
/// is ordered by room_id and includes rooms that received no points.
std::vector<std::pair<int, PointCloud>> extract_rooms(const PointCloud& cloud, const RoomSegmentation& seg);

/// Runs of consecutive cell indices as [start, length] pairs.
nlohmann::json encode_runs(const std::vector<std::size_t>& cells);
std::vector<std::size_t> decode_runs(const nlohmann::json& runs);

nlohmann::json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RoomSegmentation& seg);
RoomSegmentation segmentation_from_json(const nlohmann::json& j);

}  // namespace roomgraph
