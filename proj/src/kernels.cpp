#include "roomgraph/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace roomgraph::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

PointIndex::PointIndex(std::span<const Vec3> points, double bucket)
    : points_(points), bucket_(bucket) {
  if (!(bucket > 0.0)) throw Error(Errc::invalid_argument, "PointIndex bucket must be positive");
  for (std::size_t k = 0; k < points.size(); ++k) {
    buckets_[key(points[k])].push_back(static_cast<std::uint32_t>(k));
  }
}

PointIndex::Key PointIndex::key(const Vec3& p) const {
  return {static_cast<int>(std::floor(p.x / bucket_)), static_cast<int>(std::floor(p.y / bucket_)),
          static_cast<int>(std::floor(p.z / bucket_))};
}

std::vector<std::uint32_t> PointIndex::within(const Vec3& q, double radius) const {
  std::vector<std::uint32_t> out;
  const Key c = key(q);
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dz = -1; dz <= 1; ++dz) {
        auto it = buckets_.find(Key{c.x + dx, c.y + dy, c.z + dz});
        if (it == buckets_.end()) continue;
        for (std::uint32_t j : it->second) {
          if (within_radius(points_[j], q, radius)) out.push_back(j);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(double radius_cells) {
  std::vector<std::pair<int, int>> offsets;
  const int r = static_cast<int>(std::floor(radius_cells + 1e-9));
  const double r2 = radius_cells * radius_cells + 1e-9;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r2) offsets.emplace_back(dx, dy);
    }
  }
  return offsets;
}

inline std::uint8_t erode_at(std::span<const std::uint8_t> mask, int width, int height, int x,
                             int y, const std::vector<std::pair<int, int>>& offsets) {
  if (!mask[static_cast<std::size_t>(y) * width + x]) return 0;
  for (const auto& [dx, dy] : offsets) {
    const int nx = x + dx;
    const int ny = y + dy;
    if (nx < 0 || ny < 0 || nx >= width || ny >= height) return 0;
    if (!mask[static_cast<std::size_t>(ny) * width + nx]) return 0;
  }
  return 1;
}

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over one line.
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
  auto meet = [f](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
           (2.0 * q - 2.0 * p);
  };
  int k = 0;
  v[0] = 0;
  z[0] = -kNoFeature;
  z[1] = kNoFeature;
  for (int q = 1; q < n; ++q) {
    double s = meet(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = meet(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kNoFeature;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = static_cast<double>(q - v[k]);
    d[q] = std::min(kNoFeature, diff * diff + f[v[k]]);
  }
}

void edt_column(std::vector<double>& grid, int width, int height, int x) {
  std::vector<double> f(height), d(height), z(height + 1);
  std::vector<int> v(height);
  for (int y = 0; y < height; ++y) f[y] = grid[static_cast<std::size_t>(y) * width + x];
  edt_1d(f.data(), d.data(), height, v.data(), z.data());
  for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = d[y];
}

void edt_row(std::vector<double>& grid, int width, int y) {
  std::vector<double> f(width), d(width), z(width + 1);
  std::vector<int> v(width);
  double* row = grid.data() + static_cast<std::size_t>(y) * width;
  std::copy(row, row + width, f.begin());
  edt_1d(f.data(), d.data(), width, v.data(), z.data());
  std::copy(d.begin(), d.end(), row);
}

std::vector<double> edt_init(std::span<const std::uint8_t> features) {
  std::vector<double> g(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) g[k] = features[k] ? 0.0 : kNoFeature;
  return g;
}

inline double dot_row(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

inline int distance_bin(const Vec3& a, const Vec3& b, int bins, double max_distance) {
  const double d = (a - b).norm();
  const int k = static_cast<int>(d / max_distance * bins);
  return std::clamp(k, 0, bins - 1);
}

}  // namespace

std::vector<std::uint32_t> project_counts(std::span<const Vec3> points, const GridSpec& spec) {
  const std::size_t cells = spec.cell_count();
  std::vector<std::uint32_t> counts(cells, 0);
  const long n = static_cast<long>(points.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> local(cells, 0);
#pragma omp for schedule(static) nowait
    for (long k = 0; k < n; ++k) {
      const Cell c = spec.locate(points[k].x, points[k].y);
      ++local[spec.index(c.i, c.j)];
    }
#pragma omp critical
    for (std::size_t k = 0; k < cells; ++k) counts[k] += local[k];
  }
  return counts;
}

std::vector<std::uint8_t> erode_disk(std::span<const std::uint8_t> mask, int width, int height,
                                     double radius_cells) {
  const auto offsets = disk_offsets(radius_cells);
  std::vector<std::uint8_t> out(mask.size(), 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out[static_cast<std::size_t>(y) * width + x] = erode_at(mask, width, height, x, y, offsets);
    }
  }
  return out;
}

std::vector<double> squared_edt(std::span<const std::uint8_t> features, int width, int height) {
  std::vector<double> g = edt_init(features);
#pragma omp parallel for schedule(static)
  for (int x = 0; x < width; ++x) edt_column(g, width, height, x);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) edt_row(g, width, y);
  return g;
}

std::vector<double> dot_matrix(std::span<const double> a, std::size_t rows_a,
                               std::span<const double> b, std::size_t rows_b, std::size_t dim) {
  std::vector<double> out(rows_a * rows_b);
  const long n = static_cast<long>(rows_a);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < rows_b; ++j) {
      out[static_cast<std::size_t>(i) * rows_b + j] =
          dot_row(a.data() + static_cast<std::size_t>(i) * dim, b.data() + j * dim, dim);
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> radius_neighbors(std::span<const Vec3> points,
                                                         double radius) {
  const PointIndex index(points, radius);
  std::vector<std::vector<std::uint32_t>> out(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long k = 0; k < n; ++k) out[k] = index.within(points[k], radius);
  return out;
}

std::vector<std::uint64_t> distance_histogram(std::span<const Vec3> points, int bins,
                                              double max_distance) {
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(bins), 0);
  const long n = static_cast<long>(points.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(static_cast<std::size_t>(bins), 0);
#pragma omp for schedule(dynamic, 16) nowait
    for (long i = 0; i < n; ++i) {
      for (long j = i + 1; j < n; ++j) ++local[distance_bin(points[i], points[j], bins, max_distance)];
    }
#pragma omp critical
    for (int k = 0; k < bins; ++k) hist[k] += local[k];
  }
  return hist;
}

namespace serial {

std::vector<std::uint32_t> project_counts(std::span<const Vec3> points, const GridSpec& spec) {
  std::vector<std::uint32_t> counts(spec.cell_count(), 0);
  for (const Vec3& p : points) {
    const Cell c = spec.locate(p.x, p.y);
    ++counts[spec.index(c.i, c.j)];
  }
  return counts;
}

std::vector<std::uint8_t> erode_disk(std::span<const std::uint8_t> mask, int width, int height,
                                     double radius_cells) {
  const auto offsets = disk_offsets(radius_cells);
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out[static_cast<std::size_t>(y) * width + x] = erode_at(mask, width, height, x, y, offsets);
    }
  }
  return out;
}

std::vector<double> squared_edt(std::span<const std::uint8_t> features, int width, int height) {
  std::vector<double> g = edt_init(features);
  for (int x = 0; x < width; ++x) edt_column(g, width, height, x);
  for (int y = 0; y < height; ++y) edt_row(g, width, y);
  return g;
}

std::vector<double> dot_matrix(std::span<const double> a, std::size_t rows_a,
                               std::span<const double> b, std::size_t rows_b, std::size_t dim) {
  std::vector<double> out(rows_a * rows_b);
  for (std::size_t i = 0; i < rows_a; ++i) {
    for (std::size_t j = 0; j < rows_b; ++j) {
      out[i * rows_b + j] = dot_row(a.data() + i * dim, b.data() + j * dim, dim);
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> radius_neighbors(std::span<const Vec3> points,
                                                         double radius) {
  const PointIndex index(points, radius);
  std::vector<std::vector<std::uint32_t>> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) out[k] = index.within(points[k], radius);
  return out;
}

std::vector<std::uint64_t> distance_histogram(std::span<const Vec3> points, int bins,
                                              double max_distance) {
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      ++hist[distance_bin(points[i], points[j], bins, max_distance)];
    }
  }
  return hist;
}

}  // namespace serial
}  // namespace roomgraph::kernels
