#include "roomgraph/roomseg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "roomgraph/kernels.hpp"

namespace roomgraph {
namespace {

constexpr int kDx4[4] = {1, -1, 0, 0};
constexpr int kDy4[4] = {0, 0, 1, -1};

// 4-connected flood from the given seeds over cells where `passable` is set.
std::vector<std::uint8_t> flood(const GridSpec& spec, const std::vector<std::uint8_t>& passable,
                                const std::vector<std::size_t>& seeds) {
  std::vector<std::uint8_t> reached(passable.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t s : seeds) {
    if (passable[s] && !reached[s]) {
      reached[s] = 1;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const Cell c = spec.cell(stack.back());
    stack.pop_back();
    for (int d = 0; d < 4; ++d) {
      const int ni = c.i + kDx4[d], nj = c.j + kDy4[d];
      if (!spec.contains(ni, nj)) continue;
      const std::size_t n = spec.index(ni, nj);
      if (passable[n] && !reached[n]) {
        reached[n] = 1;
        stack.push_back(n);
      }
    }
  }
  return reached;
}

// Labels connected components in raster order; returns the component count.
int label_components(const GridSpec& spec, const std::vector<std::uint8_t>& mask, bool eight,
                     std::vector<int>& labels) {
  labels.assign(mask.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || labels[start] >= 0) continue;
    labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const Cell c = spec.cell(stack.back());
      stack.pop_back();
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || (!eight && di != 0 && dj != 0)) continue;
          const int ni = c.i + di, nj = c.j + dj;
          if (!spec.contains(ni, nj)) continue;
          const std::size_t n = spec.index(ni, nj);
          if (mask[n] && labels[n] < 0) {
            labels[n] = next;
            stack.push_back(n);
          }
        }
      }
    }
    ++next;
  }
  return next;
}

std::vector<std::uint8_t> free_space(const ValueGrid& combined, const RegionDetectParams& params,
                                     std::vector<std::uint8_t>& wall) {
  const GridSpec& spec = combined.spec;
  const std::size_t n = spec.cell_count();
  wall.assign(n, 0);
  std::vector<std::uint8_t> open(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    wall[k] = combined.cells[k] >= params.wall_threshold ? 1 : 0;
    open[k] = wall[k] ? 0 : 1;
  }
  if (params.min_wall_area > 0.0) {
    // Free-standing clutter (columns, cabinets) is not structure.
    std::vector<int> comp;
    const int count = label_components(spec, wall, true, comp);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(count), 0);
    for (int c : comp) {
      if (c >= 0) ++sizes[static_cast<std::size_t>(c)];
    }
    const double cell_area = spec.cell_size * spec.cell_size;
    for (std::size_t k = 0; k < n; ++k) {
      if (comp[k] >= 0 && static_cast<double>(sizes[static_cast<std::size_t>(comp[k])]) * cell_area < params.min_wall_area) {
        wall[k] = 0;
        open[k] = 1;
      }
    }
  }
  std::vector<std::size_t> edge;
  for (int i = 0; i < spec.width; ++i) {
    edge.push_back(spec.index(i, 0));
    edge.push_back(spec.index(i, spec.height - 1));
  }
  for (int j = 0; j < spec.height; ++j) {
    edge.push_back(spec.index(0, j));
    edge.push_back(spec.index(spec.width - 1, j));
  }
  const auto exterior = flood(spec, open, edge);
  std::vector<std::uint8_t> interior(n, 0);
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    interior[k] = open[k] && !exterior[k];
    any = any || interior[k];
  }
  // No enclosing wall ring: fall back to all open space.
  if (!any) interior = open;

  std::vector<int> comp;
  const int count = label_components(spec, interior, false, comp);
  if (count == 0) return interior;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count), 0);
  for (int c : comp) {
    if (c >= 0) ++sizes[static_cast<std::size_t>(c)];
  }
  const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  int i0 = spec.width, i1 = -1, j0 = spec.height, j1 = -1;
  for (std::size_t k = 0; k < n; ++k) {
    if (comp[k] != largest) continue;
    const Cell c = spec.cell(k);
    i0 = std::min(i0, c.i);
    i1 = std::max(i1, c.i);
    j0 = std::min(j0, c.j);
    j1 = std::max(j1, c.j);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Cell c = spec.cell(k);
    if (c.i < i0 || c.i > i1 || c.j < j0 || c.j > j1) interior[k] = 0;
  }
  return interior;
}

// Clearance in meters of every free cell; the raster frame counts as obstacle.
std::vector<double> clearance(const GridSpec& spec, const std::vector<std::uint8_t>& free) {
  const int w = spec.width + 2, h = spec.height + 2;
  std::vector<std::uint8_t> obstacle(static_cast<std::size_t>(w) * h, 1);
  for (int j = 0; j < spec.height; ++j) {
    for (int i = 0; i < spec.width; ++i) {
      obstacle[static_cast<std::size_t>(j + 1) * w + (i + 1)] = free[spec.index(i, j)] ? 0 : 1;
    }
  }
  const auto sq = kernels::squared_edt(obstacle, w, h);
  std::vector<double> out(spec.cell_count(), 0.0);
  for (int j = 0; j < spec.height; ++j) {
    for (int i = 0; i < spec.width; ++i) {
      out[spec.index(i, j)] = std::sqrt(sq[static_cast<std::size_t>(j + 1) * w + (i + 1)]) * spec.cell_size;
    }
  }
  return out;
}

void grow_wavefront(const GridSpec& spec, const std::vector<std::uint8_t>& free, std::vector<int>& labels) {
  std::vector<std::size_t> frontier;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= 0) frontier.push_back(k);
  }
  std::vector<int> claim(labels.size(), std::numeric_limits<int>::max());
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t k : frontier) {
      const Cell c = spec.cell(k);
      for (int d = 0; d < 4; ++d) {
        const int ni = c.i + kDx4[d], nj = c.j + kDy4[d];
        if (!spec.contains(ni, nj)) continue;
        const std::size_t n = spec.index(ni, nj);
        if (!free[n] || labels[n] >= 0) continue;
        if (claim[n] == std::numeric_limits<int>::max()) next.push_back(n);
        claim[n] = std::min(claim[n], labels[k]);
      }
    }
    for (std::size_t n : next) labels[n] = claim[n];
    frontier = std::move(next);
  }
}

void merge_small_regions(const GridSpec& spec, int count, double min_cells, std::vector<int>& labels) {
  std::vector<std::size_t> area(static_cast<std::size_t>(count), 0);
  for (int l : labels) {
    if (l >= 0) ++area[static_cast<std::size_t>(l)];
  }
  std::vector<std::uint8_t> settled(static_cast<std::size_t>(count), 0);
  while (true) {
    int victim = -1;
    for (int r = 0; r < count; ++r) {
      if (settled[r] || area[r] == 0 || static_cast<double>(area[r]) >= min_cells) continue;
      if (victim < 0 || area[r] < area[victim]) victim = r;
    }
    if (victim < 0) break;
    std::map<int, std::size_t> shared;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] != victim) continue;
      const Cell c = spec.cell(k);
      for (int d = 0; d < 4; ++d) {
        const int ni = c.i + kDx4[d], nj = c.j + kDy4[d];
        if (!spec.contains(ni, nj)) continue;
        const int other = labels[spec.index(ni, nj)];
        if (other >= 0 && other != victim) ++shared[other];
      }
    }
    if (shared.empty()) {
      settled[victim] = 1;
      continue;
    }
    int target = shared.begin()->first;
    for (const auto& [r, len] : shared) {
      if (len > shared[target]) target = r;
    }
    for (int& l : labels) {
      if (l == victim) l = target;
    }
    area[target] += area[victim];
    area[victim] = 0;
  }
}

}  // namespace

void RegionDetectParams::validate() const {
  if (!(wall_threshold > 0.0 && wall_threshold <= 1.0)) throw Error(Errc::invalid_argument, "wall_threshold must lie in (0, 1]");
  if (!(seed_distance > 0.0)) throw Error(Errc::invalid_argument, "seed_distance must be positive");
  if (!(min_area >= 0.0)) throw Error(Errc::invalid_argument, "min_area must be non-negative");
  if (!(min_wall_area >= 0.0)) throw Error(Errc::invalid_argument, "min_wall_area must be non-negative");
}

std::vector<int> RoomSegmentation::label_raster() const {
  std::vector<int> labels(spec.cell_count(), kUnassigned);
  if (wall_mask.cells.size() == labels.size()) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (wall_mask.cells[k]) labels[k] = kWall;
    }
  }
  for (const RegionMask& m : masks) {
    for (std::size_t c : m.cells) labels[c] = m.room_id;
  }
  return labels;
}

void RoomSegmentation::validate() const {
  spec.validate();
  std::vector<int> owner(spec.cell_count(), -1);
  for (const RegionMask& m : masks) {
    if (m.cells.empty()) throw Error(Errc::schema, "room " + std::to_string(m.room_id) + " has an empty mask");
    for (std::size_t c : m.cells) {
      if (c >= owner.size()) throw Error(Errc::out_of_range, "room " + std::to_string(m.room_id) + " mask leaves the footprint");
      if (owner[c] >= 0) throw Error(Errc::schema, "rooms " + std::to_string(owner[c]) + " and " + std::to_string(m.room_id) + " overlap");
      if (wall_mask.cells.size() == owner.size() && wall_mask.cells[c]) {
        throw Error(Errc::schema, "room " + std::to_string(m.room_id) + " claims a wall cell");
      }
      owner[c] = m.room_id;
    }
  }
}

RoomSegmentation MorphologicalRegionDetector::detect(const ValueGrid& combined) const {
  params_.validate();
  const GridSpec& spec = combined.spec;
  spec.validate();
  for (std::size_t k = 0; k < combined.cells.size(); ++k) {
    const double v = combined.cells[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(Errc::out_of_range, "combined map is not normalized: value " + std::to_string(v) + " at cell " + std::to_string(k));
    }
  }
  std::vector<std::uint8_t> wall;
  const auto free = free_space(combined, params_, wall);

  RoomSegmentation seg;
  seg.spec = spec;
  seg.wall_mask = BinaryGrid(spec);
  seg.wall_mask.cells = wall;

  const auto dist = clearance(spec, free);
  std::vector<std::uint8_t> seed_mask(free.size(), 0);
  for (std::size_t k = 0; k < free.size(); ++k) {
    seed_mask[k] = free[k] && dist[k] >= params_.seed_distance - 1e-9 ? 1 : 0;
  }
  std::vector<int> labels;
  const int count = label_components(spec, seed_mask, true, labels);
  if (count == 0) return seg;

  grow_wavefront(spec, free, labels);
  const double cell_area = spec.cell_size * spec.cell_size;
  merge_small_regions(spec, count, params_.min_area / cell_area, labels);

  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(count));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= 0) cells[static_cast<std::size_t>(labels[k])].push_back(k);
  }
  std::size_t largest = 0;
  for (const auto& c : cells) largest = std::max(largest, c.size());
  for (auto& c : cells) {
    if (c.empty()) continue;
    RegionMask mask;
    mask.room_id = static_cast<int>(seg.masks.size());
    mask.confidence = static_cast<double>(c.size()) / static_cast<double>(largest);
    mask.cells = std::move(c);
    seg.masks.push_back(std::move(mask));
  }
  return seg;
}

RoomSegmentation detect_regions(const ValueGrid& combined, const RegionDetectParams& params) {
  return MorphologicalRegionDetector(params).detect(combined);
}

std::vector<std::pair<int, PointCloud>> extract_rooms(const PointCloud& cloud, const RoomSegmentation& seg) {
  const auto labels = seg.label_raster();
  std::map<int, std::size_t> slot;
  std::vector<std::pair<int, PointCloud>> rooms;
  for (const RegionMask& m : seg.masks) {
    slot[m.room_id] = rooms.size();
    rooms.emplace_back(m.room_id, PointCloud{});
  }
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.points[k];
    const auto c = seg.spec.cell_of(p.x, p.y);
    if (!c) throw Error(Errc::spec_mismatch, "point " + std::to_string(k) + " lies outside the segmentation footprint");
    const int l = labels[seg.spec.index(c->i, c->j)];
    if (l < 0) continue;
    PointCloud& dst = rooms[slot.at(l)].second;
    if (cloud.has_colors()) {
      dst.add(p, cloud.colors[k]);
    } else {
      dst.add(p);
    }
  }
  return rooms;
}

nlohmann::json encode_runs(const std::vector<std::size_t>& cells) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t k = 0;
  while (k < cells.size()) {
    std::size_t len = 1;
    while (k + len < cells.size() && cells[k + len] == cells[k] + len) ++len;
    runs.push_back({cells[k], len});
    k += len;
  }
  return runs;
}

std::vector<std::size_t> decode_runs(const nlohmann::json& runs) {
  std::vector<std::size_t> cells;
  for (const auto& r : runs) {
    if (!r.is_array() || r.size() != 2) throw Error(Errc::schema, "cell run must be [start, length]");
    const auto start = r[0].get<std::size_t>();
    const auto len = r[1].get<std::size_t>();
    for (std::size_t k = 0; k < len; ++k) cells.push_back(start + k);
  }
  if (!std::is_sorted(cells.begin(), cells.end())) throw Error(Errc::schema, "cell runs are not ascending");
  return cells;
}

nlohmann::json to_json(const GridSpec& spec) {
  return {{"origin", {spec.origin_x, spec.origin_y}},
          {"cell_size", spec.cell_size},
          {"width", spec.width},
          {"height", spec.height}};
}

GridSpec grid_spec_from_json(const nlohmann::json& j) {
  GridSpec spec;
  spec.origin_x = j.at("origin").at(0).get<double>();
  spec.origin_y = j.at("origin").at(1).get<double>();
  spec.cell_size = j.at("cell_size").get<double>();
  spec.width = j.at("width").get<int>();
  spec.height = j.at("height").get<int>();
  spec.validate();
  return spec;
}

nlohmann::json to_json(const RoomSegmentation& seg) {
  nlohmann::json rooms = nlohmann::json::array();
  for (const RegionMask& m : seg.masks) {
    rooms.push_back({{"room_id", m.room_id}, {"confidence", m.confidence}, {"cells", encode_runs(m.cells)}});
  }
  std::vector<std::size_t> walls;
  for (std::size_t k = 0; k < seg.wall_mask.cells.size(); ++k) {
    if (seg.wall_mask.cells[k]) walls.push_back(k);
  }
  return {{"grid", to_json(seg.spec)}, {"rooms", rooms}, {"walls", encode_runs(walls)}};
}

RoomSegmentation segmentation_from_json(const nlohmann::json& j) {
  try {
    RoomSegmentation seg;
    seg.spec = grid_spec_from_json(j.at("grid"));
    seg.wall_mask = BinaryGrid(seg.spec);
    for (std::size_t c : decode_runs(j.at("walls"))) {
      if (c >= seg.wall_mask.cells.size()) throw Error(Errc::schema, "wall cell outside the grid");
      seg.wall_mask.cells[c] = 1;
    }
    for (const auto& r : j.at("rooms")) {
      RegionMask m;
      m.room_id = r.at("room_id").get<int>();
      m.confidence = r.at("confidence").get<double>();
      m.cells = decode_runs(r.at("cells"));
      seg.masks.push_back(std::move(m));
    }
    seg.validate();
    return seg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, std::string("segmentation document: ") + e.what());
  }
}

}  // namespace roomgraph
