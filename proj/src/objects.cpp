#include "roomgraph/objects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "roomgraph/kernels.hpp"

namespace roomgraph {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // the root is always the smallest member
  }

 private:
  std::vector<std::uint32_t> parent_;
};

double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::uint64_t xy_key(const Vec3& p, double cell) {
  const auto i = static_cast<std::int64_t>(std::floor(p.x / cell));
  const auto j = static_cast<std::int64_t>(std::floor(p.y / cell));
  return (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint32_t>(j);
}

std::size_t xy_coverage(std::span<const Vec3> points, double cell) {
  std::unordered_set<std::uint64_t> cells;
  for (const Vec3& p : points) cells.insert(xy_key(p, cell));
  return cells.size();
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

Aabb3 Box3::aabb() const {
  const double c = std::abs(std::cos(yaw)), s = std::abs(std::sin(yaw));
  const Vec3 half{0.5 * (c * size.x + s * size.y), 0.5 * (s * size.x + c * size.y), 0.5 * size.z};
  return {center - half, center + half};
}

bool Box3::contains(const Vec3& p) const {
  const Vec3 d = p - center;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double u = c * d.x + s * d.y, v = -s * d.x + c * d.y;
  return std::abs(u) <= 0.5 * size.x && std::abs(v) <= 0.5 * size.y && std::abs(d.z) <= 0.5 * size.z;
}

void Box3::validate() const {
  if (!(size.x > 0.0 && size.y > 0.0 && size.z > 0.0)) throw Error(Errc::invalid_argument, "box sizes must be positive");
}

Box3 Box3::from_aabb(const Aabb3& box) { return {box.center(), box.extent(), 0.0}; }

void BoxDetectParams::validate() const {
  if (!(plane_margin >= 0.0)) throw Error(Errc::invalid_argument, "plane_margin must be non-negative");
  if (!(link_radius > 0.0)) throw Error(Errc::invalid_argument, "link_radius must be positive");
  if (min_pts < 1) throw Error(Errc::invalid_argument, "min_pts must be at least 1");
  if (!(pad >= 0.0)) throw Error(Errc::invalid_argument, "pad must be non-negative");
}

std::vector<Detection> ClusterBoxDetector::detect(const PointCloud& room_cloud, const BinaryGrid* wall_mask) const {
  params_.validate();
  if (room_cloud.empty()) throw Error(Errc::invalid_argument, "cannot detect objects in an empty cloud");
  const std::span<const Vec3> all(room_cloud.points);

  std::vector<double> zs;
  zs.reserve(all.size());
  for (const Vec3& p : all) zs.push_back(p.z);
  const double z_lo = percentile(zs, 1.0), z_hi = percentile(zs, 99.0);
  const double floor_top = z_lo + params_.plane_margin, ceiling_bottom = z_hi - params_.plane_margin;

  const double cover_cell = 0.05;
  const std::size_t occupied = xy_coverage(all, cover_cell);
  std::vector<Vec3> floor_band, ceiling_band;
  for (const Vec3& p : all) {
    if (p.z <= floor_top) floor_band.push_back(p);
    if (p.z >= ceiling_bottom) ceiling_band.push_back(p);
  }
  const double need = params_.plane_coverage * static_cast<double>(occupied);
  const bool strip_floor = static_cast<double>(xy_coverage(floor_band, cover_cell)) >= need;
  const bool strip_ceiling = z_hi > floor_top && static_cast<double>(xy_coverage(ceiling_band, cover_cell)) >= need;

  std::vector<Vec3> kept;
  for (const Vec3& p : all) {
    if (strip_floor && p.z <= floor_top) continue;
    if (strip_ceiling && p.z >= ceiling_bottom) continue;
    if (wall_mask != nullptr) {
      const auto c = wall_mask->spec.cell_of(p.x, p.y);
      if (c && wall_mask->at(c->i, c->j)) continue;
    }
    kept.push_back(p);
  }
  if (kept.empty()) return {};

  const auto neighbors = kernels::radius_neighbors(kept, params_.link_radius);
  DisjointSets sets(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (std::uint32_t j : neighbors[k]) sets.unite(static_cast<std::uint32_t>(k), j);
  }
  std::map<std::uint32_t, std::vector<std::uint32_t>> clusters;  // keyed by smallest member
  for (std::size_t k = 0; k < kept.size(); ++k) clusters[sets.find(static_cast<std::uint32_t>(k))].push_back(static_cast<std::uint32_t>(k));

  struct Candidate {
    Aabb3 box;
    std::size_t count;
  };
  std::vector<Candidate> candidates;
  for (const auto& [root, members] : clusters) {
    if (members.size() < static_cast<std::size_t>(params_.min_pts)) continue;
    Aabb3 box{kept[members[0]], kept[members[0]]};
    for (std::uint32_t m : members) {
      const Vec3& p = kept[m];
      box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
      box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
    }
    const Vec3 e = box.extent();
    const int wide = (e.x >= params_.min_extent) + (e.y >= params_.min_extent) + (e.z >= params_.min_extent);
    if (wide < 2) continue;
    if (strip_floor && box.min.z <= floor_top + params_.link_radius) box.min.z = z_lo;
    candidates.push_back({box, members.size()});
  }
  std::size_t largest = 0;
  for (const auto& c : candidates) largest = std::max(largest, c.count);
  std::vector<Detection> out;
  const Vec3 pad{params_.pad, params_.pad, params_.pad};
  for (const auto& c : candidates) {
    Detection d;
    d.box = Box3::from_aabb({c.box.min - pad, c.box.max + pad});
    d.score = static_cast<double>(c.count) / static_cast<double>(largest);
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> detect_boxes(const PointCloud& room_cloud, const BoxDetectParams& params, const BinaryGrid* wall_mask) {
  return ClusterBoxDetector(params).detect(room_cloud, wall_mask);
}

void DbscanParams::validate() const {
  if (!(eps > 0.0)) throw Error(Errc::invalid_argument, "eps must be positive");
  if (min_pts < 1) throw Error(Errc::invalid_argument, "min_pts must be at least 1");
  if (n < 8) throw Error(Errc::invalid_argument, "n must be at least 8");
}

DbscanResult dbscan(std::span<const Vec3> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error(Errc::invalid_argument, "eps must be positive");
  if (min_pts < 1) throw Error(Errc::invalid_argument, "min_pts must be at least 1");
  DbscanResult r;
  const std::size_t n = points.size();
  r.labels.assign(n, DbscanResult::kNoise);
  r.core.assign(n, 0);
  if (n == 0) return r;
  const auto neighbors = kernels::radius_neighbors(points, eps);
  for (std::size_t k = 0; k < n; ++k) r.core[k] = neighbors[k].size() >= static_cast<std::size_t>(min_pts) ? 1 : 0;

  DisjointSets sets(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!r.core[k]) continue;
    for (std::uint32_t j : neighbors[k]) {
      if (r.core[j]) sets.unite(static_cast<std::uint32_t>(k), j);
    }
  }
  // Roots are the smallest member, so visiting cores in index order numbers
  // clusters by their smallest core index.
  std::vector<int> id_of_root(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    if (!r.core[k]) continue;
    const std::uint32_t root = sets.find(static_cast<std::uint32_t>(k));
    if (id_of_root[root] < 0) id_of_root[root] = r.clusters++;
    r.labels[k] = id_of_root[root];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (r.core[k]) continue;
    int best = DbscanResult::kNoise;
    for (std::uint32_t j : neighbors[k]) {
      if (r.core[j] && (best < 0 || r.labels[j] < best)) best = r.labels[j];
    }
    r.labels[k] = best;
  }
  return r;
}

std::vector<Vec3> resample_points(std::span<const Vec3> points, int n, std::uint64_t seed) {
  if (points.empty()) throw Error(Errc::invalid_argument, "cannot resample an empty point set");
  if (n < 1) throw Error(Errc::invalid_argument, "resample target must be positive");
  const std::size_t target = static_cast<std::size_t>(n);
  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(target);
  if (points.size() >= target) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < target; ++k) {
      const std::size_t pick = k + uniform_index(rng, idx.size() - k);
      std::swap(idx[k], idx[pick]);
    }
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.push_back(points[i]);
  } else {
    out.assign(points.begin(), points.end());
    while (out.size() < target) out.push_back(points[uniform_index(rng, points.size())]);
  }
  return out;
}

ObjectPoints filter_object_points(const PointCloud& room_cloud, const Box3& box, const DbscanParams& params,
                                  std::uint64_t seed) {
  params.validate();
  box.validate();
  std::vector<Vec3> crop;
  for (const Vec3& p : room_cloud.points) {
    if (box.contains(p)) crop.push_back(p);
  }
  if (crop.empty()) throw Error(Errc::invalid_argument, "box contains no points");

  const DbscanResult db = dbscan(crop, params.eps, params.min_pts);
  std::vector<Vec3> kept;
  if (db.clusters == 0) {
    kept = crop;
  } else {
    std::vector<std::size_t> count(static_cast<std::size_t>(db.clusters), 0);
    std::vector<Vec3> sum(static_cast<std::size_t>(db.clusters));
    for (std::size_t k = 0; k < crop.size(); ++k) {
      if (db.labels[k] < 0) continue;
      ++count[db.labels[k]];
      sum[db.labels[k]] += crop[k];
    }
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < db.clusters; ++c) {
      const double d = (sum[c] * (1.0 / static_cast<double>(count[c])) - box.center).norm();
      if (best < 0 || count[c] > count[best] || (count[c] == count[best] && d < best_d)) {
        best = c;
        best_d = d;
      }
    }
    for (std::size_t k = 0; k < crop.size(); ++k) {
      if (db.labels[k] == best) kept.push_back(crop[k]);
    }
  }
  return {resample_points(kept, params.n, seed), false};
}

ObjectPoints normalize_points(std::span<const Vec3> points) {
  if (points.empty()) throw Error(Errc::invalid_argument, "cannot normalize an empty point set");
  Vec3 centroid;
  for (const Vec3& p : points) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(points.size()));
  ObjectPoints out;
  out.normalized = true;
  out.points.reserve(points.size());
  double radius = 0.0;
  for (const Vec3& p : points) {
    out.points.push_back(p - centroid);
    radius = std::max(radius, out.points.back().norm());
  }
  if (radius > 0.0) {
    for (Vec3& p : out.points) p = p * (1.0 / radius);
  }
  return out;
}

ObjectLabel classify_object(const ObjectPoints& obj, std::span<const std::string> categories,
                            const EmbeddingBackend& backend) {
  if (categories.empty()) throw Error(Errc::invalid_argument, "no object categories given");
  const EmbeddingVector shape = backend.embed_points(obj.points);
  const std::set<std::string> unique(categories.begin(), categories.end());
  ObjectLabel out;
  for (const auto& c : unique) out.ranked.emplace_back(c, shape.dot(backend.embed_text(c)));
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  out.label = out.ranked.front().first;
  return out;
}

}  // namespace roomgraph
