#include "roomgraph/snap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

namespace roomgraph {
namespace {

constexpr double kNearPlane = 1e-3;

struct Frame {
  Vec3 right, up, forward;
};

Frame look_at_frame(const CameraPose& pose) {
  Vec3 forward = pose.look_at - pose.position;
  const double fn = forward.norm();
  if (!(fn > 0.0)) throw Error(Errc::degenerate, "camera position coincides with its look-at point");
  forward = forward * (1.0 / fn);
  Vec3 right = forward.cross(pose.up);
  const double rn = right.norm();
  if (!(rn > 1e-12)) throw Error(Errc::degenerate, "camera up vector is parallel to the view direction");
  right = right * (1.0 / rn);
  return {right, right.cross(forward), forward};
}

}  // namespace

void SnapParams::validate() const {
  if (num_views < 1) throw Error(Errc::invalid_argument, "num_views must be at least 1");
  if (width < 16 || height < 16) throw Error(Errc::invalid_argument, "snapshot dimensions must be at least 16 pixels");
  if (splat_radius < 0) throw Error(Errc::invalid_argument, "splat_radius must be non-negative");
  if (!(vfov > 0.0 && vfov < std::numbers::pi)) throw Error(Errc::invalid_argument, "vfov must lie in (0, pi)");
}

double camera_height(double z_min, double z_max, const SnapParams& params) {
  if (params.fixed_z) return *params.fixed_z;
  return std::clamp(z_min + params.eye_height, z_min, std::max(z_min, z_max));
}

std::vector<CameraPose> camera_ring(const Aabb3& room_bbox, const SnapParams& params) {
  params.validate();
  const Vec3 extent = room_bbox.extent();
  if (!(extent.x > 0.0) || !(extent.y > 0.0)) {
    throw Error(Errc::degenerate, "room bounding box has zero extent in x or y");
  }
  const double xc = 0.5 * (room_bbox.min.x + room_bbox.max.x);
  const double yc = 0.5 * (room_bbox.min.y + room_bbox.max.y);
  const double zc = camera_height(room_bbox.min.z, room_bbox.max.z, params);
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(params.num_views));
  for (int t = 0; t < params.num_views; ++t) {
    const double theta = 2.0 * std::numbers::pi * t / params.num_views;
    CameraPose pose;
    pose.position = {xc + 0.5 * extent.x * std::cos(theta), yc + 0.5 * extent.y * std::sin(theta), zc};
    pose.look_at = {xc, yc, zc};
    pose.vfov = params.vfov;
    poses.push_back(pose);
  }
  return poses;
}

void pull_cameras_inward(std::vector<CameraPose>& poses, const BinaryGrid& free) {
  const GridSpec& spec = free.spec;
  for (CameraPose& pose : poses) {
    const auto cell = spec.cell_of(pose.position.x, pose.position.y);
    if (cell && free.at(cell->i, cell->j)) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < free.cells.size(); ++k) {
      if (!free.cells[k]) continue;
      const Cell c = spec.cell(k);
      const double dx = spec.center_x(c.i) - pose.position.x;
      const double dy = spec.center_y(c.j) - pose.position.y;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    if (!std::isfinite(best)) return;  // no free cell at all
    const Cell c = spec.cell(best_k);
    pose.position.x = spec.center_x(c.i);
    pose.position.y = spec.center_y(c.j);
  }
}

RgbImage render_snapshot(const PointCloud& cloud, const CameraPose& pose, const SnapParams& params) {
  params.validate();
  if (cloud.empty()) throw Error(Errc::invalid_argument, "cannot render an empty cloud");
  const Frame frame = look_at_frame(pose);
  const int w = params.width, h = params.height;
  const double focal = 0.5 * h / std::tan(0.5 * pose.vfov);

  struct Projected {
    int px, py;
    double depth;
    std::size_t index;
  };
  std::vector<Projected> visible;
  visible.reserve(cloud.size());
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3 rel = cloud.points[k] - pose.position;
    const double zc = rel.dot(frame.forward);
    if (zc <= kNearPlane) continue;
    const double px = 0.5 * w + focal * rel.dot(frame.right) / zc;
    const double py = 0.5 * h - focal * rel.dot(frame.up) / zc;
    const double reach = params.splat_radius + 1.0;
    if (px < -reach || py < -reach || px >= w + reach || py >= h + reach) continue;
    visible.push_back({static_cast<int>(std::floor(px)), static_cast<int>(std::floor(py)), zc, k});
    dmin = std::min(dmin, zc);
    dmax = std::max(dmax, zc);
  }

  RgbImage image(w, h, params.background);
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  const int r = params.splat_radius;
  const double span = dmax - dmin;
  for (const Projected& p : visible) {
    Rgb color;
    if (cloud.has_colors()) {
      color = cloud.colors[p.index];
    } else {
      const double t = span > 0.0 ? (p.depth - dmin) / span : 0.0;
      const auto g = static_cast<std::uint8_t>(std::lround(30.0 + 190.0 * t));
      color = {g, g, g};
    }
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r * r) continue;
        const int x = p.px + dx, y = p.py + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        double& z = zbuf[static_cast<std::size_t>(y) * w + x];
        if (p.depth < z) {
          z = p.depth;
          image.set(x, y, color);
        }
      }
    }
  }
  return image;
}

std::vector<RgbImage> snap_room(const PointCloud& room_cloud, const SnapParams& params, const BinaryGrid* free) {
  if (room_cloud.empty()) throw Error(Errc::invalid_argument, "cannot snapshot an empty room");
  const Aabb3 box = Aabb3::of(room_cloud.points);
  return snap_rect(room_cloud, box.min.x, box.min.y, box.max.x, box.max.y, 0.0, params, free);
}

}  // namespace roomgraph

namespace roomgraph {

std::vector<RgbImage> snap_rect(const PointCloud& cloud, double x0, double y0, double x1, double y1, double margin,
                                const SnapParams& params, const BinaryGrid* free) {
  PointCloud crop;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.points[k];
    if (p.x < x0 - margin || p.x > x1 + margin || p.y < y0 - margin || p.y > y1 + margin) continue;
    if (cloud.has_colors()) {
      crop.add(p, cloud.colors[k]);
    } else {
      crop.add(p);
    }
  }
  if (crop.empty()) throw Error(Errc::invalid_argument, "no points near the snapshot rectangle");
  const Aabb3 z_range = Aabb3::of(crop.points);
  auto poses = camera_ring({{x0, y0, z_range.min.z}, {x1, y1, z_range.max.z}}, params);
  if (params.pull_inward && free != nullptr) pull_cameras_inward(poses, *free);
  std::vector<RgbImage> images(poses.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < static_cast<int>(poses.size()); ++t) {
    try {
      images[static_cast<std::size_t>(t)] = render_snapshot(crop, poses[static_cast<std::size_t>(t)], params);
    } catch (...) {
#pragma omp critical(roomgraph_snap_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return images;
}

}  // namespace roomgraph
