#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "roomgraph/error.hpp"

namespace roomgraph {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Raw scene geometry. `colors` is either empty or parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }

  void add(const Vec3& p) { points.push_back(p); }
  void add(const Vec3& p, Rgb c) {
    points.push_back(p);
    colors.push_back(c);
  }

  /// Throws Errc::invalid_argument on non-finite coordinates or a color
  /// array whose length differs from the point count.
  void validate() const;
};

PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices);

/// Exchanges y and z so that a y-up scan becomes z-up.
PointCloud swap_yz(PointCloud cloud);

struct Aabb3 {
  Vec3 min;
  Vec3 max;

  static Aabb3 of(std::span<const Vec3> points);
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  bool operator==(const Aabb3&) const = default;
};

struct Cell {
  int i = 0;
  int j = 0;
  bool operator==(const Cell&) const = default;
};

// Cell-relative slack so that values sitting on a cell boundary up to
// floating-point representation error still bin to the higher index.
inline constexpr double kBinSlack = 1e-9;

inline int floor_bin(double offset, double width) {
  return static_cast<int>(std::floor(offset / width + kBinSlack));
}

/// Raster footprint over the xy plane. Cell (i, j) covers
/// [x0 + i*c, x0 + (i+1)*c) x [y0 + j*c, y0 + (j+1)*c); storage is row-major
/// in j.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 0.05;
  int width = 1;
  int height = 1;

  bool operator==(const GridSpec&) const = default;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool contains(int i, int j) const {
    return i >= 0 && j >= 0 && i < width && j < height;
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(i);
  }
  Cell cell(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width)),
            static_cast<int>(index / static_cast<std::size_t>(width))};
  }
  Cell locate(double x, double y) const {
    return {floor_bin(x - origin_x, cell_size), floor_bin(y - origin_y, cell_size)};
  }
  std::optional<Cell> cell_of(double x, double y) const {
    Cell c = locate(x, y);
    if (!contains(c.i, c.j)) return std::nullopt;
    return c;
  }
  double center_x(int i) const { return origin_x + (i + 0.5) * cell_size; }
  double center_y(int j) const { return origin_y + (j + 0.5) * cell_size; }

  /// Throws Errc::invalid_argument unless cell_size > 0 and width, height >= 1.
  void validate() const;

  /// Footprint of the cloud's xy bounding box, padded by `pad` cells.
  static GridSpec covering(const PointCloud& cloud, double cell_size, int pad = 1);
};

template <class T>
struct Grid {
  GridSpec spec;
  std::vector<T> cells;

  Grid() = default;
  explicit Grid(const GridSpec& s, T fill = T{}) : spec(s), cells(s.cell_count(), fill) {}

  T& at(int i, int j) { return cells[spec.index(i, j)]; }
  const T& at(int i, int j) const { return cells[spec.index(i, j)]; }
  int width() const { return spec.width; }
  int height() const { return spec.height; }
  bool operator==(const Grid&) const = default;
};

using CountGrid = Grid<std::uint32_t>;
using ValueGrid = Grid<double>;
using BinaryGrid = Grid<std::uint8_t>;

inline void require_same_spec(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw Error(Errc::spec_mismatch, std::string(what) + ": grid specs differ");
}

/// Splits the cloud into n slabs of equal height over [z_min, z_max]; the
/// topmost point joins slab n-1.
std::vector<PointCloud> slice_layers(const PointCloud& cloud, int n);

/// Per-cell point counts. Throws Errc::out_of_range if any point falls
/// outside the footprint.
CountGrid project_to_grid(const PointCloud& cloud, const GridSpec& spec);

BinaryGrid binarize(const CountGrid& grid);

}  // namespace roomgraph
