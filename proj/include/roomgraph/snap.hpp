#pragma once

#include <optional>
#include <vector>

#include "roomgraph/geom.hpp"
#include "roomgraph/image_io.hpp"

namespace roomgraph {

struct CameraPose {
  Vec3 position;
  Vec3 look_at;
  Vec3 up{0.0, 0.0, 1.0};
  double vfov = 1.047;  // radians
};

struct SnapParams {
  int num_views = 8;
  int width = 336;
  int height = 336;
  int splat_radius = 2;  // pixels
  Rgb background{255, 255, 255};
  double eye_height = 1.5;        // z_c = clamp(z_floor + eye_height, room z-range)
  std::optional<double> fixed_z;  // overrides the eye-height policy
  double vfov = 1.047;
  bool pull_inward = false;
  void validate() const;
};

/// Camera height for a room spanning [z_min, z_max].
double camera_height(double z_min, double z_max, const SnapParams& params);

/// num_views poses evenly spaced in angle on the ellipse inscribed in the
/// room's xy bounding box, all looking at the box center at height z_c.
/// Throws Errc::degenerate for a zero x or y extent.
std::vector<CameraPose> camera_ring(const Aabb3& room_bbox, const SnapParams& params);

/// Moves every pose whose xy cell is not free to the nearest free cell center.
void pull_cameras_inward(std::vector<CameraPose>& poses, const BinaryGrid& free);

/// Z-buffered point splatting through a pinhole camera. Uses point colors if
/// present, otherwise depth-shaded gray (near dark, far light).
/// Throws Errc::degenerate if the pose has no valid look-at frame.
RgbImage render_snapshot(const PointCloud& cloud, const CameraPose& pose, const SnapParams& params);

/// camera_ring over the cloud's bounding box followed by one render per pose.
std::vector<RgbImage> snap_room(const PointCloud& room_cloud, const SnapParams& params,
                                const BinaryGrid* free = nullptr);

}  // namespace roomgraph

namespace roomgraph {

/// Renders the part of `cloud` within `margin` of the xy rectangle
/// [x0, x1] x [y0, y1]; the camera ellipse is inscribed in the rectangle
/// itself, so walls just outside a room mask stay in view.
std::vector<RgbImage> snap_rect(const PointCloud& cloud, double x0, double y0, double x1, double y1, double margin,
                                const SnapParams& params, const BinaryGrid* free = nullptr);

}  // namespace roomgraph
