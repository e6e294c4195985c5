#include "roomgraph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "roomgraph/roomseg.hpp"

namespace roomgraph {
namespace {

constexpr std::uint8_t kDark = 40;
constexpr std::uint8_t kLight = 215;
constexpr Rgb kObjectGray{128, 128, 128};

Rgb gray(std::uint8_t v) { return {v, v, v}; }

// Samples at s/2, 3s/2, ... strictly inside [a, b].
std::vector<double> stations(double a, double b, double s) {
  std::vector<double> out;
  for (double t = a + 0.5 * s; t < b - 1e-9; t += s) out.push_back(t);
  return out;
}

void sample_rect_plane(PointCloud& cloud, const Rect& r, double z, double s, Rgb color) {
  for (double y : stations(r.y0, r.y1, s)) {
    for (double x : stations(r.x0, r.x1, s)) cloud.add({x, y, z}, color);
  }
}

bool in_opening(const std::vector<SynthDoor>& doors, double x, double y) {
  for (const auto& d : doors) {
    if (d.opening.contains(x, y)) return true;
  }
  return false;
}

// Inner wall faces of one room; samples spread `depth` into the wall.
void sample_walls(PointCloud& cloud, const Rect& r, const std::vector<SynthDoor>& doors, const SynthParams& p, Rgb color,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> into(0.0, p.wall_depth);
  const double s = p.spacing, e = p.wall_depth;
  const auto heights = stations(0.0, p.height, s);
  auto face = [&](bool along_x, double fixed, double lo, double hi, double outward) {
    for (double t : stations(lo - e, hi + e, s)) {
      for (double z : heights) {
        const double d = into(rng);
        const double x = along_x ? t : fixed + outward * d;
        const double y = along_x ? fixed + outward * d : t;
        if (in_opening(doors, x, y)) continue;
        cloud.add({x, y, z}, color);
      }
    }
  };
  face(true, r.y0, r.x0, r.x1, -1.0);
  face(true, r.y1, r.x0, r.x1, +1.0);
  face(false, r.x0, r.y0, r.y1, -1.0);
  face(false, r.x1, r.y0, r.y1, +1.0);
}

struct ArchetypeShape {
  double sx, sy, sz;  // full size
  double z0;          // bottom above the floor
  bool cylinder;
};

ArchetypeShape shape_of(const std::string& label) {
  if (label == "floor lamp") return {0.2, 0.2, 1.8, 0.0, true};
  if (label == "table") return {1.2, 0.8, 0.08, 0.7, false};
  if (label == "water station") return {0.5, 0.5, 1.1, 0.0, false};
  throw Error(Errc::invalid_argument, "unknown object archetype '" + label + "'");
}

}  // namespace

RoomStyle room_style(const std::string& type) {
  static const std::map<std::string, RoomStyle> styles = {
      {"hallway", {gray(kDark), gray(kLight), gray(kLight)}},
      {"kitchen", {gray(kLight), gray(kDark), gray(kLight)}},
      {"bedroom", {gray(kLight), gray(kLight), gray(kDark)}},
      {"bathroom", {gray(kDark), gray(kDark), gray(kLight)}},
      {"classroom", {gray(kDark), gray(kLight), gray(kDark)}},
      {"office", {gray(kLight), gray(kDark), gray(kDark)}},
  };
  if (auto it = styles.find(type); it != styles.end()) return it->second;
  std::uint64_t state = fnv1a64(type);
  auto level = [&] { return static_cast<std::uint8_t>(40 + splitmix64(state) % 176); };
  const auto f = level(), w = level(), c = level();
  return {gray(f), gray(w), gray(c)};
}

std::vector<std::string> known_room_types() { return {"bathroom", "bedroom", "classroom", "hallway", "kitchen", "office"}; }

std::vector<std::string> object_archetypes() { return {"floor lamp", "table", "water station"}; }

Box3 archetype_box(const std::string& label, double x, double y, double floor_z) {
  const ArchetypeShape a = shape_of(label);
  return {{x, y, floor_z + a.z0 + 0.5 * a.sz}, {a.sx, a.sy, a.sz}, 0.0};
}

PointCloud archetype_points(const std::string& label, double x, double y, double spacing, double floor_z) {
  const ArchetypeShape a = shape_of(label);
  PointCloud out;
  const double zb = floor_z + a.z0, zt = zb + a.sz;
  // Heights include both rims so the samples span the full box.
  std::vector<double> heights;
  const int nz = std::max(1, static_cast<int>(std::ceil(a.sz / spacing)));
  for (int k = 0; k <= nz; ++k) heights.push_back(zb + a.sz * k / nz);
  if (a.cylinder) {
    const double r = 0.5 * a.sx;
    const int around = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / spacing)));
    for (double z : heights) {
      for (int k = 0; k < around; ++k) {
        const double t = 2.0 * std::numbers::pi * k / around;
        out.add({x + r * std::cos(t), y + r * std::sin(t), z}, kObjectGray);
      }
    }
    for (double v = -r + 0.5 * spacing; v < r; v += spacing) {
      for (double u = -r + 0.5 * spacing; u < r; u += spacing) {
        if (u * u + v * v <= r * r) out.add({x + u, y + v, zt}, kObjectGray);
      }
    }
    return out;
  }
  const double hx = 0.5 * a.sx, hy = 0.5 * a.sy;
  auto span = [&](double lo, double hi) {
    std::vector<double> v;
    const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / spacing)));
    for (int k = 0; k <= n; ++k) v.push_back(lo + (hi - lo) * k / n);
    return v;
  };
  const auto xs = span(x - hx, x + hx), ys = span(y - hy, y + hy);
  for (double z : heights) {
    for (double u : xs) {
      out.add({u, y - hy, z}, kObjectGray);
      out.add({u, y + hy, z}, kObjectGray);
    }
    for (std::size_t k = 1; k + 1 < ys.size(); ++k) {
      out.add({x - hx, ys[k], z}, kObjectGray);
      out.add({x + hx, ys[k], z}, kObjectGray);
    }
  }
  for (std::size_t j = 1; j + 1 < ys.size(); ++j) {
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
      out.add({xs[i], ys[j], zt}, kObjectGray);
      if (a.z0 > 0.0) out.add({xs[i], ys[j], zb}, kObjectGray);  // underside of raised slabs
    }
  }
  return out;
}

Floorplan apartment_plan(const SynthParams& params) {
  if (params.room_types.size() != 4) throw Error(Errc::invalid_argument, "the apartment needs exactly four room types");
  const double t = params.wall_thickness, hall_w = 2.4, room_d = 4.0, width = 9.0;
  Floorplan plan;
  plan.rooms.push_back({params.room_types[0], {0.0, 0.0, width, hall_w}});
  const double y0 = hall_w + t, y1 = y0 + room_d;
  const double third = width / 3.0;
  for (int k = 0; k < 3; ++k) {
    const double x0 = k * third + (k > 0 ? 0.5 * t : 0.0);
    const double x1 = (k + 1) * third - (k < 2 ? 0.5 * t : 0.0);
    plan.rooms.push_back({params.room_types[static_cast<std::size_t>(k + 1)], {x0, y0, x1, y1}});
    const double xc = 0.5 * (x0 + x1);
    plan.doors.push_back({{xc - 0.5 * params.door_width, hall_w, xc + 0.5 * params.door_width, y0}});
  }
  if (params.objects) {
    plan.objects = {
        {"water station", 0, 8.2, 1.0},  {"floor lamp", 0, 0.7, 0.8},
        {"table", 1, 1.5, 4.6},          {"water station", 1, 0.7, 5.9},
        {"floor lamp", 2, 3.8, 5.9},     {"table", 2, 4.6, 4.2},
        {"floor lamp", 3, 8.3, 5.9},     {"water station", 3, 7.0, 5.8},
    };
  }
  return plan;
}

SynthScene render_floorplan(const Floorplan& plan, const SynthParams& params) {
  if (!(params.spacing > 0.0) || !(params.spacing > 0.0) || !(params.height > 0.0)) throw Error(Errc::invalid_argument, "synthetic spacing and height must be positive");
  SynthScene scene;
  scene.plan = plan;
  std::mt19937_64 rng(params.seed);
  for (const auto& room : plan.rooms) {
    const RoomStyle style = room_style(room.type);
    sample_rect_plane(scene.cloud, room.rect, 0.0, params.spacing, style.floor);
    if (params.ceiling) sample_rect_plane(scene.cloud, room.rect, params.height, params.spacing, style.ceiling);
    sample_walls(scene.cloud, room.rect, plan.doors, params, style.wall, rng);
  }
  for (const auto& door : plan.doors) {
    sample_rect_plane(scene.cloud, door.opening, 0.0, params.spacing, gray(kDark));
    if (params.ceiling) sample_rect_plane(scene.cloud, door.opening, params.height, params.spacing, gray(kLight));
  }
  for (const auto& obj : plan.objects) {
    const PointCloud pts = archetype_points(obj.label, obj.x, obj.y, params.spacing);
    for (std::size_t k = 0; k < pts.size(); ++k) scene.cloud.add(pts.points[k], pts.colors[k]);
    scene.gt_boxes.push_back(archetype_box(obj.label, obj.x, obj.y));
  }
  scene.spec = GridSpec::covering(scene.cloud, params.cell_size);
  for (const auto& room : plan.rooms) {
    std::vector<std::size_t> cells;
    for (int j = 0; j < scene.spec.height; ++j) {
      for (int i = 0; i < scene.spec.width; ++i) {
        if (room.rect.contains(scene.spec.center_x(i), scene.spec.center_y(j))) cells.push_back(scene.spec.index(i, j));
      }
    }
    scene.gt_masks.push_back(std::move(cells));
  }
  return scene;
}

SynthScene synth_apartment(const SynthParams& params) { return render_floorplan(apartment_plan(params), params); }

SynthScene synth_two_rooms(double side, double door_width, const SynthParams& params) {
  const double t = params.wall_thickness;
  Floorplan plan;
  plan.rooms.push_back({"kitchen", {0.0, 0.0, side, side}});
  plan.rooms.push_back({"bedroom", {side + t, 0.0, 2.0 * side + t, side}});
  if (door_width > 0.0) plan.doors.push_back({{side, 0.5 * side - 0.5 * door_width, side + t, 0.5 * side + 0.5 * door_width}});
  SynthParams p = params;
  return render_floorplan(plan, p);
}

SynthScene synth_single_room(const std::string& type, double width, double depth, const SynthParams& params,
                             const std::vector<SynthObject>& objects) {
  Floorplan plan;
  plan.rooms.push_back({type, {0.0, 0.0, width, depth}});
  plan.objects = objects;
  for (auto& o : plan.objects) o.room = 0;
  return render_floorplan(plan, params);
}

SynthScene synth_corridor(double length, double width, const SynthParams& params) {
  Floorplan plan;
  plan.rooms.push_back({"hallway", {0.0, 0.0, length, width}});
  return render_floorplan(plan, params);
}

nlohmann::json SynthScene::ground_truth() const {
  nlohmann::json rooms = nlohmann::json::array(), objects = nlohmann::json::array();
  for (std::size_t k = 0; k < plan.rooms.size(); ++k) {
    const Rect& r = plan.rooms[k].rect;
    rooms.push_back({{"room_id", k}, {"label", plan.rooms[k].type}, {"rect", {r.x0, r.y0, r.x1, r.y1}}, {"cells", encode_runs(gt_masks[k])}});
  }
  for (std::size_t k = 0; k < plan.objects.size(); ++k) {
    const Box3& b = gt_boxes[k];
    objects.push_back({{"object_id", k},
                       {"label", plan.objects[k].label},
                       {"room_id", plan.objects[k].room},
                       {"box", {{"center", {b.center.x, b.center.y, b.center.z}}, {"size", {b.size.x, b.size.y, b.size.z}}, {"yaw", b.yaw}}}});
  }
  return {{"grid", to_json(spec)}, {"rooms", rooms}, {"objects", objects}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth gt;
    gt.spec = grid_spec_from_json(j.at("grid"));
    for (const auto& r : j.at("rooms")) {
      gt.room_labels.push_back(r.at("label").get<std::string>());
      gt.room_cells.push_back(decode_runs(r.at("cells")));
    }
    for (const auto& o : j.at("objects")) {
      gt.object_labels.push_back(o.at("label").get<std::string>());
      const auto& b = o.at("box");
      Box3 box;
      box.center = {b.at("center").at(0).get<double>(), b.at("center").at(1).get<double>(), b.at("center").at(2).get<double>()};
      box.size = {b.at("size").at(0).get<double>(), b.at("size").at(1).get<double>(), b.at("size").at(2).get<double>()};
      box.yaw = b.value("yaw", 0.0);
      gt.object_boxes.push_back(box);
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, std::string("ground-truth document: ") + e.what());
  }
}

}  // namespace roomgraph
