#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roomgraph/embedding.hpp"
#include "roomgraph/lookup.hpp"
#include "roomgraph/navgraph.hpp"
#include "roomgraph/objects.hpp"
#include "roomgraph/roomseg.hpp"

namespace roomgraph {

inline constexpr const char* kSceneGraphVersion = "roomgraph.scene/1";

struct FloorNode {
  int id = 0;
  double z_min = 0.0;
  double z_max = 0.0;
  GridSpec grid;
};

struct RoomNode {
  int room_id = 0;
  std::vector<std::size_t> cells;  // ascending linear indices into the floor grid
  double confidence = 1.0;
  Aabb3 bbox;
  std::string label;
  std::map<std::string, int> votes;
  std::map<std::string, double> similarities;  // mean cosine per category
  Vec3 centroid;
  int nav_anchor = -1;  // -1 only when the navigation graph is empty
};

struct ObjectNode {
  int object_id = 0;
  int room_id = 0;
  Box3 box;
  double score = 1.0;
  std::string label;
  std::vector<std::pair<std::string, double>> ranked;
  Vec3 centroid;
  int nav_anchor = -1;
  int n = 0;  // points in the filtered object set
};

struct SceneGraph {
  std::string version = kSceneGraphVersion;
  FloorNode floor;
  std::vector<RoomNode> rooms;
  std::vector<ObjectNode> objects;
  NavGraph nav;
  std::string config_hash;  // provenance stamp of the producing run
  std::uint64_t seed = 0;

  const RoomNode* room(int room_id) const;
  /// Unique ids, objects pointing at existing rooms, anchors naming existing
  /// nodes, centroids inside boxes. Throws Errc::schema.
  void validate() const;
};

struct ObjectInput {
  Detection detection;
  ObjectLabel label;
  Vec3 centroid;  // of the filtered object points
  int n = 0;
};

/// Rooms come from seg.masks with labels[k] describing masks[k]. An object's
/// parent is the room whose mask holds its centroid cell, else the room with
/// the nearest mask cell (ties to the lower id). Anchors are the nearest
/// node reachable by a straight segment through `passable`, else the plain
/// nearest node.
SceneGraph assemble_graph(const RoomSegmentation& seg, const std::vector<RoomLabelResult>& labels,
                          const std::vector<ObjectInput>& objects, const NavGraph& nav, const BinaryGrid& passable,
                          double z_min, double z_max);

/// Nearest visible node, else nearest node, else -1 for an empty graph.
int nearest_anchor(const NavGraph& nav, Point2 p, const BinaryGrid* passable);

struct QuerySpec {
  std::optional<std::string> room_text;
  std::string object_text;
};

struct NavTarget {
  int object_id = -1;  // -1 when the matched room holds no objects
  int room_id = -1;
  int nav_node = -1;
  Point2 position;
  double room_similarity = 0.0;
  double object_similarity = 0.0;
  std::vector<std::string> warnings;
};

/// Room by text-embedding cosine to room_text (all objects when absent),
/// then object by cosine to object_text. Equal best scores resolve to the
/// lowest id and add an "ambiguous match" warning.
NavTarget resolve_query(const SceneGraph& graph, const QuerySpec& query, const EmbeddingBackend& backend);

/// Canonical form: sorted keys, reals rounded to 1e-6.
nlohmann::json to_json(const SceneGraph& graph);
std::string serialize(const SceneGraph& graph);
/// Throws Errc::version on a foreign version tag, Errc::schema on missing
/// fields or dangling references.
SceneGraph deserialize(const std::string& text);
SceneGraph scene_graph_from_json(const nlohmann::json& j);
bool structurally_equal(const SceneGraph& a, const SceneGraph& b);

/// floor -> room -> object hierarchy.
std::string to_dot(const SceneGraph& graph);

}  // namespace roomgraph
