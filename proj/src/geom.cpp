#include "roomgraph/geom.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "roomgraph/kernels.hpp"

namespace roomgraph {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    case Errc::missing_file: return "missing_file";
    case Errc::header: return "header";
    case Errc::truncated: return "truncated";
    case Errc::unsupported_layout: return "unsupported_layout";
    case Errc::spec_mismatch: return "spec_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::degenerate: return "degenerate";
    case Errc::unreachable: return "unreachable";
    case Errc::schema: return "schema";
    case Errc::version: return "version";
    case Errc::backend: return "backend";
  }
  return "unknown";
}

void PointCloud::validate() const {
  if (!colors.empty() && colors.size() != points.size()) {
    throw Error(Errc::invalid_argument, "color count " + std::to_string(colors.size()) +
                                            " differs from point count " +
                                            std::to_string(points.size()));
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec3& p = points[k];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(Errc::invalid_argument, "non-finite coordinate at point " + std::to_string(k));
    }
  }
}

PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices) {
  PointCloud out;
  out.points.reserve(indices.size());
  if (cloud.has_colors()) out.colors.reserve(indices.size());
  for (std::size_t k : indices) {
    out.points.push_back(cloud.points[k]);
    if (cloud.has_colors()) out.colors.push_back(cloud.colors[k]);
  }
  return out;
}

PointCloud swap_yz(PointCloud cloud) {
  for (Vec3& p : cloud.points) std::swap(p.y, p.z);
  return cloud;
}

Aabb3 Aabb3::of(std::span<const Vec3> points) {
  if (points.empty()) throw Error(Errc::invalid_argument, "bounding box of an empty point set");
  Aabb3 box{points.front(), points.front()};
  for (const Vec3& p : points) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
  }
  return box;
}

void GridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(Errc::invalid_argument, "cell_size must be positive");
  }
  if (width < 1 || height < 1) throw Error(Errc::invalid_argument, "grid must be at least 1x1");
}

GridSpec GridSpec::covering(const PointCloud& cloud, double cell_size, int pad) {
  if (cloud.empty()) throw Error(Errc::invalid_argument, "cannot size a grid for an empty cloud");
  if (!(cell_size > 0.0)) throw Error(Errc::invalid_argument, "cell_size must be positive");
  const Aabb3 box = Aabb3::of(cloud.points);
  GridSpec spec;
  spec.cell_size = cell_size;
  spec.origin_x = box.min.x - pad * cell_size;
  spec.origin_y = box.min.y - pad * cell_size;
  spec.width = floor_bin(box.max.x - spec.origin_x, cell_size) + 1 + pad;
  spec.height = floor_bin(box.max.y - spec.origin_y, cell_size) + 1 + pad;
  return spec;
}

std::vector<PointCloud> slice_layers(const PointCloud& cloud, int n) {
  if (n < 1) throw Error(Errc::invalid_argument, "slice count must be >= 1");
  if (cloud.empty()) throw Error(Errc::invalid_argument, "cannot slice an empty cloud");
  const Aabb3 box = Aabb3::of(cloud.points);
  const double z0 = box.min.z;
  const double step = (box.max.z - box.min.z) / n;

  std::vector<PointCloud> slices(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.points[k];
    int s = step > 0.0 ? floor_bin(p.z - z0, step) : 0;
    s = std::clamp(s, 0, n - 1);
    if (cloud.has_colors()) {
      slices[static_cast<std::size_t>(s)].add(p, cloud.colors[k]);
    } else {
      slices[static_cast<std::size_t>(s)].add(p);
    }
  }
  return slices;
}

CountGrid project_to_grid(const PointCloud& cloud, const GridSpec& spec) {
  spec.validate();
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.points[k];
    if (!spec.cell_of(p.x, p.y)) {
      throw Error(Errc::out_of_range, "point " + std::to_string(k) + " (" + std::to_string(p.x) +
                                          ", " + std::to_string(p.y) +
                                          ") lies outside the grid footprint");
    }
  }
  CountGrid grid;
  grid.spec = spec;
  grid.cells = kernels::project_counts(cloud.points, spec);
  return grid;
}

BinaryGrid binarize(const CountGrid& grid) {
  BinaryGrid out(grid.spec);
  for (std::size_t k = 0; k < grid.cells.size(); ++k) out.cells[k] = grid.cells[k] > 0 ? 1 : 0;
  return out;
}

}  // namespace roomgraph
