#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomgraph/embedding.hpp"
#include "roomgraph/geom.hpp"
#include "roomgraph/objects.hpp"
#include "roomgraph/snap.hpp"

namespace roomgraph {

/// Axis-aligned floor rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct RoomStyle {
  Rgb floor, wall, ceiling;
};

/// Color scheme that gives each known room type a distinct look; unknown
/// types get a scheme derived from the name hash.
RoomStyle room_style(const std::string& type);

/// Room types with a dedicated style.
std::vector<std::string> known_room_types();

/// Object archetypes: "floor lamp" (thin pole), "table" (flat slab),
/// "water station" (tall box).
std::vector<std::string> object_archetypes();

/// Ground-truth box of an archetype standing on the floor at (x, y).
Box3 archetype_box(const std::string& label, double x, double y, double floor_z = 0.0);

/// Surface samples of the archetype at the given spacing, gray.
PointCloud archetype_points(const std::string& label, double x, double y, double spacing, double floor_z = 0.0);

struct SynthRoom {
  std::string type;
  Rect rect;
};

struct SynthDoor {
  // Opening through the wall between two rooms (or to the outside): the
  // rectangle spans the wall thickness and the door width.
  Rect opening;
};

struct SynthObject {
  std::string label;
  int room = -1;  // index into rooms
  double x = 0.0, y = 0.0;
};

struct Floorplan {
  std::vector<SynthRoom> rooms;
  std::vector<SynthDoor> doors;
  std::vector<SynthObject> objects;
};

struct SynthParams {
  std::uint64_t seed = 7;
  double height = 2.6;
  double spacing = 0.025;      // sample pitch on every surface
  double wall_depth = 0.04;    // wall samples spread this far into the wall behind each face
  double cell_size = 0.05;
  double door_width = 0.9;
  double wall_thickness = 0.1;
  bool ceiling = true;
  bool objects = true;
  std::vector<std::string> room_types{"hallway", "kitchen", "bedroom", "bathroom"};
};

struct SynthScene {
  PointCloud cloud;
  GridSpec spec;  // covering grid at params.cell_size
  Floorplan plan;
  std::vector<std::vector<std::size_t>> gt_masks;  // cells whose centers lie inside each room rect
  std::vector<Box3> gt_boxes;                      // parallel to plan.objects

  nlohmann::json ground_truth() const;
};

/// Hallway along the bottom with three rooms above it, each joined to the
/// hallway by a full-height door. room_types gives the four types in order
/// hallway, left, middle, right.
Floorplan apartment_plan(const SynthParams& params);

/// Samples floor, ceiling and wall faces of every room (walls only where no
/// door opening cuts them) plus the planted objects.
SynthScene render_floorplan(const Floorplan& plan, const SynthParams& params);

SynthScene synth_apartment(const SynthParams& params = {});

/// Two square rooms side by side sharing one wall with a centred door.
SynthScene synth_two_rooms(double side, double door_width, const SynthParams& params = {});

/// Single closed room of the given type and size, optionally with objects.
SynthScene synth_single_room(const std::string& type, double width, double depth, const SynthParams& params,
                             const std::vector<SynthObject>& objects = {});

/// Empty walled corridor [0, length] x [0, width].
SynthScene synth_corridor(double length, double width, const SynthParams& params = {});

/// Loads the ground-truth document written by SynthScene::ground_truth.
struct GroundTruth {
  GridSpec spec;
  std::vector<std::string> room_labels;
  std::vector<std::vector<std::size_t>> room_cells;
  std::vector<std::string> object_labels;
  std::vector<Box3> object_boxes;
};
GroundTruth ground_truth_from_json(const nlohmann::json& j);

}  // namespace roomgraph
