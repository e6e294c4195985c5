#include "roomgraph/scenegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace roomgraph {
namespace {

constexpr double kTieTolerance = 1e-9;

double canonical(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

nlohmann::json vec(const Vec3& v) { return {canonical(v.x), canonical(v.y), canonical(v.z)}; }
Vec3 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

nlohmann::json canonical_nav(const NavGraph& nav) {
  nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
  for (const auto& p : nav.nodes) nodes.push_back({canonical(p.x), canonical(p.y)});
  for (const auto& e : nav.edges) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& p : e.polyline) poly.push_back({canonical(p.x), canonical(p.y)});
    edges.push_back({{"a", e.a}, {"b", e.b}, {"length", canonical(e.length)}, {"polyline", poly}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const RoomNode* SceneGraph::room(int room_id) const {
  for (const auto& r : rooms) {
    if (r.room_id == room_id) return &r;
  }
  return nullptr;
}

void SceneGraph::validate() const {
  const int nodes = static_cast<int>(nav.nodes.size());
  auto anchor_ok = [&](int a) { return nodes == 0 ? a == -1 : a >= 0 && a < nodes; };
  std::set<int> room_ids, object_ids;
  for (const auto& r : rooms) {
    if (!room_ids.insert(r.room_id).second) throw Error(Errc::schema, "duplicate room id " + std::to_string(r.room_id));
    if (!anchor_ok(r.nav_anchor)) throw Error(Errc::schema, "room " + std::to_string(r.room_id) + " has a dangling nav anchor");
    for (std::size_t c : r.cells) {
      if (c >= floor.grid.cell_count()) throw Error(Errc::schema, "room " + std::to_string(r.room_id) + " mask leaves the floor grid");
    }
  }
  for (const auto& o : objects) {
    if (!object_ids.insert(o.object_id).second) throw Error(Errc::schema, "duplicate object id " + std::to_string(o.object_id));
    if (!room_ids.count(o.room_id)) {
      throw Error(Errc::schema, "object " + std::to_string(o.object_id) + " references missing room " + std::to_string(o.room_id));
    }
    if (!anchor_ok(o.nav_anchor)) throw Error(Errc::schema, "object " + std::to_string(o.object_id) + " has a dangling nav anchor");
  }
  try {
    nav.validate();
  } catch (const Error& e) {
    throw Error(Errc::schema, std::string("navigation graph: ") + e.what());
  }
}

int nearest_anchor(const NavGraph& nav, Point2 p, const BinaryGrid* passable) {
  if (nav.nodes.empty()) return -1;
  std::vector<int> order(nav.nodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return distance(nav.nodes[a], p) < distance(nav.nodes[b], p); });
  if (passable != nullptr) {
    for (int v : order) {
      if (line_of_sight(*passable, p, nav.nodes[v])) return v;
    }
  }
  return order.front();
}

SceneGraph assemble_graph(const RoomSegmentation& seg, const std::vector<RoomLabelResult>& labels,
                          const std::vector<ObjectInput>& objects, const NavGraph& nav, const BinaryGrid& passable,
                          double z_min, double z_max) {
  if (labels.size() != seg.masks.size()) throw Error(Errc::invalid_argument, "one room label is required per mask");
  if (seg.masks.empty() && !objects.empty()) throw Error(Errc::invalid_argument, "objects given for a scene without rooms");
  SceneGraph g;
  g.floor.z_min = z_min;
  g.floor.z_max = z_max;
  g.floor.grid = seg.spec;
  g.nav = nav;
  const GridSpec& spec = seg.spec;
  for (std::size_t k = 0; k < seg.masks.size(); ++k) {
    const RegionMask& m = seg.masks[k];
    RoomNode r;
    r.room_id = m.room_id;
    r.cells = m.cells;
    r.confidence = m.confidence;
    r.label = labels[k].label;
    r.votes = labels[k].votes;
    r.similarities = labels[k].mean_similarity;
    double sx = 0.0, sy = 0.0;
    Aabb3 box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), z_min},
              {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), z_max}};
    for (std::size_t c : m.cells) {
      const Cell cell = spec.cell(c);
      const double x = spec.center_x(cell.i), y = spec.center_y(cell.j);
      sx += x;
      sy += y;
      box.min.x = std::min(box.min.x, x - 0.5 * spec.cell_size);
      box.min.y = std::min(box.min.y, y - 0.5 * spec.cell_size);
      box.max.x = std::max(box.max.x, x + 0.5 * spec.cell_size);
      box.max.y = std::max(box.max.y, y + 0.5 * spec.cell_size);
    }
    const double count = static_cast<double>(std::max<std::size_t>(1, m.cells.size()));
    r.centroid = {sx / count, sy / count, 0.5 * (z_min + z_max)};
    r.bbox = box;
    r.nav_anchor = nearest_anchor(nav, {r.centroid.x, r.centroid.y}, &passable);
    g.rooms.push_back(std::move(r));
  }

  const auto raster = seg.label_raster();
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const ObjectInput& in = objects[k];
    ObjectNode o;
    o.object_id = static_cast<int>(k);
    o.box = in.detection.box;
    o.score = in.detection.score;
    o.label = in.label.label;
    o.ranked = in.label.ranked;
    o.centroid = in.centroid;
    o.n = in.n;
    const Cell c = spec.locate(o.centroid.x, o.centroid.y);
    int parent = spec.contains(c.i, c.j) ? raster[spec.index(c.i, c.j)] : RoomSegmentation::kUnassigned;
    if (parent < 0) {
      long best = std::numeric_limits<long>::max();
      for (const RegionMask& m : seg.masks) {
        for (std::size_t cell : m.cells) {
          const Cell mc = spec.cell(cell);
          const long di = mc.i - c.i, dj = mc.j - c.j;
          const long d = di * di + dj * dj;
          if (d < best || (d == best && m.room_id < parent)) {
            best = d;
            parent = m.room_id;
          }
        }
      }
    }
    o.room_id = parent;
    o.nav_anchor = nearest_anchor(nav, {o.centroid.x, o.centroid.y}, &passable);
    g.objects.push_back(std::move(o));
  }
  g.validate();
  return g;
}

NavTarget resolve_query(const SceneGraph& graph, const QuerySpec& query, const EmbeddingBackend& backend) {
  if (query.object_text.empty()) throw Error(Errc::invalid_argument, "query needs object text");
  if (graph.rooms.empty()) throw Error(Errc::invalid_argument, "scene graph has no rooms");
  NavTarget t;
  std::vector<const RoomNode*> rooms;
  for (const auto& r : graph.rooms) rooms.push_back(&r);
  std::sort(rooms.begin(), rooms.end(), [](const RoomNode* a, const RoomNode* b) { return a->room_id < b->room_id; });

  const RoomNode* room = nullptr;
  if (query.room_text) {
    const EmbeddingVector q = backend.embed_text(*query.room_text);
    std::vector<int> tied;
    double best = -std::numeric_limits<double>::infinity();
    for (const RoomNode* r : rooms) {
      const double s = q.dot(backend.embed_text(r->label));
      if (s > best + kTieTolerance) {
        best = s;
        room = r;
        tied = {r->room_id};
      } else if (std::abs(s - best) <= kTieTolerance) {
        tied.push_back(r->room_id);
      }
    }
    t.room_id = room->room_id;
    t.room_similarity = best;
    if (tied.size() > 1) {
      std::ostringstream msg;
      msg << "ambiguous match: rooms";
      for (int id : tied) msg << ' ' << id;
      msg << " match '" << *query.room_text << "' equally; using room " << room->room_id;
      t.warnings.push_back(msg.str());
    }
  }

  std::vector<const ObjectNode*> candidates;
  for (const auto& o : graph.objects) {
    if (room == nullptr || o.room_id == room->room_id) candidates.push_back(&o);
  }
  std::sort(candidates.begin(), candidates.end(), [](const ObjectNode* a, const ObjectNode* b) { return a->object_id < b->object_id; });
  if (candidates.empty()) {
    if (room == nullptr) throw Error(Errc::invalid_argument, "scene graph has no objects");
    t.nav_node = room->nav_anchor;
    t.position = t.nav_node >= 0 ? graph.nav.nodes[t.nav_node] : Point2{room->centroid.x, room->centroid.y};
    t.warnings.push_back("room " + std::to_string(room->room_id) + " holds no objects; returning the room anchor");
    return t;
  }
  const EmbeddingVector q = backend.embed_text(query.object_text);
  const ObjectNode* obj = nullptr;
  std::vector<int> tied;
  double best = -std::numeric_limits<double>::infinity();
  for (const ObjectNode* o : candidates) {
    const double s = q.dot(backend.embed_text(o->label));
    if (s > best + kTieTolerance) {
      best = s;
      obj = o;
      tied = {o->object_id};
    } else if (std::abs(s - best) <= kTieTolerance) {
      tied.push_back(o->object_id);
    }
  }
  if (tied.size() > 1) {
    std::ostringstream msg;
    msg << "ambiguous match: objects";
    for (int id : tied) msg << ' ' << id;
    msg << " match '" << query.object_text << "' equally; using object " << obj->object_id;
    t.warnings.push_back(msg.str());
  }
  t.object_id = obj->object_id;
  t.object_similarity = best;
  if (room == nullptr) t.room_id = obj->room_id;
  t.nav_node = obj->nav_anchor;
  t.position = t.nav_node >= 0 ? graph.nav.nodes[t.nav_node] : Point2{obj->centroid.x, obj->centroid.y};
  return t;
}

nlohmann::json to_json(const SceneGraph& graph) {
  nlohmann::json rooms = nlohmann::json::array(), objects = nlohmann::json::array();
  for (const auto& r : graph.rooms) {
    nlohmann::json sims = nlohmann::json::object();
    for (const auto& [k, v] : r.similarities) sims[k] = canonical(v);
    rooms.push_back({{"room_id", r.room_id},
                     {"cells", encode_runs(r.cells)},
                     {"confidence", canonical(r.confidence)},
                     {"bbox", {{"min", vec(r.bbox.min)}, {"max", vec(r.bbox.max)}}},
                     {"label", r.label},
                     {"votes", r.votes},
                     {"similarities", sims},
                     {"centroid", vec(r.centroid)},
                     {"nav_anchor", r.nav_anchor}});
  }
  for (const auto& o : graph.objects) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& [name, s] : o.ranked) ranked.push_back({name, canonical(s)});
    objects.push_back({{"object_id", o.object_id},
                       {"room_id", o.room_id},
                       {"box", {{"center", vec(o.box.center)}, {"size", vec(o.box.size)}, {"yaw", canonical(o.box.yaw)}}},
                       {"score", canonical(o.score)},
                       {"label", o.label},
                       {"ranked", ranked},
                       {"centroid", vec(o.centroid)},
                       {"nav_anchor", o.nav_anchor},
                       {"n", o.n}});
  }
  const GridSpec& s = graph.floor.grid;
  nlohmann::json floor = {{"id", graph.floor.id},
                          {"z_range", {canonical(graph.floor.z_min), canonical(graph.floor.z_max)}},
                          {"grid",
                           {{"origin", {canonical(s.origin_x), canonical(s.origin_y)}},
                            {"cell_size", canonical(s.cell_size)},
                            {"width", s.width},
                            {"height", s.height}}},
                          {"footprint",
                           {{"min", {canonical(s.origin_x), canonical(s.origin_y)}},
                            {"max", {canonical(s.origin_x + s.width * s.cell_size), canonical(s.origin_y + s.height * s.cell_size)}}}}};
  return {{"version", graph.version},
          {"stamp", {{"config_hash", graph.config_hash}, {"seed", graph.seed}}},
          {"floor", floor},
          {"rooms", rooms},
          {"objects", objects},
          {"nav", canonical_nav(graph.nav)}};
}

std::string serialize(const SceneGraph& graph) { return to_json(graph).dump(1) + "\n"; }

SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph g;
  try {
    g.version = j.at("version").get<std::string>();
    if (g.version != kSceneGraphVersion) {
      throw Error(Errc::version, "scene graph version '" + g.version + "' is not supported (expected '" + kSceneGraphVersion + "')");
    }
    if (j.contains("stamp")) {
      g.config_hash = j["stamp"].value("config_hash", "");
      g.seed = j["stamp"].value("seed", std::uint64_t{0});
    }
    const auto& f = j.at("floor");
    g.floor.id = f.at("id").get<int>();
    g.floor.z_min = f.at("z_range").at(0).get<double>();
    g.floor.z_max = f.at("z_range").at(1).get<double>();
    g.floor.grid = grid_spec_from_json(f.at("grid"));
    for (const auto& r : j.at("rooms")) {
      RoomNode n;
      n.room_id = r.at("room_id").get<int>();
      n.cells = decode_runs(r.at("cells"));
      n.confidence = r.at("confidence").get<double>();
      n.bbox = {vec_from(r.at("bbox").at("min")), vec_from(r.at("bbox").at("max"))};
      n.label = r.at("label").get<std::string>();
      n.votes = r.at("votes").get<std::map<std::string, int>>();
      n.similarities = r.at("similarities").get<std::map<std::string, double>>();
      n.centroid = vec_from(r.at("centroid"));
      n.nav_anchor = r.at("nav_anchor").get<int>();
      g.rooms.push_back(std::move(n));
    }
    for (const auto& o : j.at("objects")) {
      ObjectNode n;
      n.object_id = o.at("object_id").get<int>();
      n.room_id = o.at("room_id").get<int>();
      n.box.center = vec_from(o.at("box").at("center"));
      n.box.size = vec_from(o.at("box").at("size"));
      n.box.yaw = o.at("box").at("yaw").get<double>();
      n.score = o.at("score").get<double>();
      n.label = o.at("label").get<std::string>();
      for (const auto& r : o.at("ranked")) n.ranked.emplace_back(r.at(0).get<std::string>(), r.at(1).get<double>());
      n.centroid = vec_from(o.at("centroid"));
      n.nav_anchor = o.at("nav_anchor").get<int>();
      n.n = o.at("n").get<int>();
      g.objects.push_back(std::move(n));
    }
    g.nav = navgraph_from_json(j.at("nav"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, std::string("scene graph document: ") + e.what());
  }
  g.validate();
  return g;
}

SceneGraph deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, std::string("scene graph is not valid JSON: ") + e.what());
  }
  return scene_graph_from_json(j);
}

bool structurally_equal(const SceneGraph& a, const SceneGraph& b) { return serialize(a) == serialize(b); }

std::string to_dot(const SceneGraph& graph) {
  std::ostringstream out;
  out << "digraph scene {\n  rankdir=TB;\n  floor" << graph.floor.id << " [shape=box,label=\"floor " << graph.floor.id << "\"];\n";
  for (const auto& r : graph.rooms) {
    out << "  room" << r.room_id << " [shape=ellipse,label=" << quoted("room " + std::to_string(r.room_id) + "\\n" + r.label) << "];\n";
    out << "  floor" << graph.floor.id << " -> room" << r.room_id << ";\n";
  }
  for (const auto& o : graph.objects) {
    out << "  object" << o.object_id << " [shape=note,label=" << quoted("object " + std::to_string(o.object_id) + "\\n" + o.label) << "];\n";
    out << "  room" << o.room_id << " -> object" << o.object_id << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace roomgraph
