// roomgraph command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "roomgraph/image_io.hpp"
#include "roomgraph/pipeline.hpp"
#include "roomgraph/ply.hpp"
#include "roomgraph/synth.hpp"

namespace fs = std::filesystem;
using namespace roomgraph;

namespace {

// --config file plus one --<key> flag per configuration key.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
    const nlohmann::json defaults = PipelineConfig{}.to_json();
    for (const auto& item : defaults.items()) {
      const std::string key = item.key();
      app->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { values[key] = v; },
          "default: " + item.value().dump());
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig base;
    if (!config_file.empty()) base = PipelineConfig::from_json(read_json(config_file));
    const nlohmann::json defaults = base.to_json();
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [key, text] : values) overrides[key] = parse_value(defaults.at(key), text);
    PipelineConfig c = PipelineConfig::from_json(overrides, base);
    c.validate();
    return c;
  }

 private:
  // Flag text is read as JSON when it parses as such; strings may be given
  // bare and lists as comma-separated names.
  static nlohmann::json parse_value(const nlohmann::json& like, const std::string& text) {
    if (!like.is_string()) {
      auto parsed = nlohmann::json::parse(text, nullptr, false);
      if (!parsed.is_discarded()) return parsed;
      if (like.is_array()) {
        nlohmann::json list = nlohmann::json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) list.push_back(item);
        return list;
      }
    }
    return text;
  }
};

void print_stages(const std::vector<StageRecord>& stages) {
  for (const auto& s : stages) {
    std::fprintf(stderr, "  %-15s %-4s %8.3fs%s%s\n", s.name.c_str(), s.ok ? "ok" : "FAIL", s.seconds,
                 s.error.empty() ? "" : "  ", s.error.c_str());
  }
}

fs::path ensure_output(const PipelineConfig& config) {
  const fs::path out = config.output;
  fs::create_directories(out);
  return out;
}

PointCloud load_or_fail(const PipelineConfig& config) {
  try {
    return load_input(config);
  } catch (const Error& e) {
    throw StageError("load", e);
  }
}

RoomSegmentation load_rooms(const std::string& path) {
  return segmentation_from_json(read_json(path));
}

std::vector<Detection> load_detections(const std::string& path) {
  const nlohmann::json j = read_json(path);
  std::vector<Detection> out;
  try {
    for (const auto& o : j.at("objects")) {
      Detection d;
      const auto& b = o.at("box");
      d.box.center = {b.at("center").at(0).get<double>(), b.at("center").at(1).get<double>(), b.at("center").at(2).get<double>()};
      d.box.size = {b.at("size").at(0).get<double>(), b.at("size").at(1).get<double>(), b.at("size").at(2).get<double>()};
      d.box.yaw = b.value("yaw", 0.0);
      d.score = o.value("score", 1.0);
      d.box.validate();
      out.push_back(d);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, path + ": " + e.what());
  }
  return out;
}

SceneGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void print_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  for (const auto& [k, v] : rows) std::cout << std::left << std::setw(static_cast<int>(w) + 2) << k << v << "\n";
}

void emit_metrics(const nlohmann::json& metrics, const std::string& out_path,
                  const std::vector<std::pair<std::string, std::string>>& rows) {
  if (!out_path.empty()) write_json(out_path, metrics);
  print_table(rows);
}

// ---------------------------------------------------------------------------

int cmd_build(const ConfigFlags& flags) {
  const PipelineConfig config = flags.resolve();
  const auto backend = make_pipeline_backend(config);
  try {
    const BuildResult r = build_scene_graph(config, *backend);
    print_stages(r.stages);
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("scene graph: %zu rooms, %zu objects, %zu nav nodes -> %s\n", r.graph.rooms.size(),
                r.graph.objects.size(), r.graph.nav.nodes.size(), (fs::path(config.output) / "scene_graph.json").c_str());
    if (r.metrics) std::printf("%s\n", r.metrics->dump(1).c_str());
    return 0;
  } catch (const StageError& e) {
    std::fprintf(stderr, "partial artifacts in %s (see run_status.json)\n", config.output.c_str());
    throw;
  }
}

int cmd_rooms_segment(const ConfigFlags& flags) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config);
  const PointCloud cloud = load_or_fail(config);
  const GridSpec spec = pipeline_grid(cloud, config);
  const DensityMaps maps = run_density(cloud, spec, config);
  const RoomSegmentation seg = run_segmentation(maps, config);
  write_json(out / "rooms.json", to_json(seg));
  if (config.write_images) {
    write_pgm(out / "combined.pgm", maps.combined);
    write_png(out / "rooms.png", label_image(seg.spec, seg.label_raster()));
  }
  std::printf("%zu rooms -> %s\n", seg.masks.size(), (out / "rooms.json").c_str());
  return 0;
}

int cmd_rooms_classify(const ConfigFlags& flags, const std::string& rooms_path) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config);
  const PointCloud cloud = load_or_fail(config);
  const RoomSegmentation seg = load_rooms(rooms_path);
  const auto backend = make_pipeline_backend(config);
  nlohmann::json doc = nlohmann::json::array();
  for (const RegionMask& m : seg.masks) {
    const RoomClassification rc = classify_room_views(cloud, seg.spec, m, config, *backend);
    nlohmann::json j = to_json(rc.result);
    j["room_id"] = m.room_id;
    doc.push_back(j);
    std::printf("room %d: %s\n", m.room_id, rc.result.label.c_str());
  }
  write_json(out / "room_labels.json", {{"rooms", doc}});
  return 0;
}

int cmd_objects_detect(const ConfigFlags& flags, const std::string& rooms_path) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config);
  const PointCloud cloud = load_or_fail(config);
  RoomSegmentation seg;
  if (rooms_path.empty()) {
    seg = run_segmentation(run_density(cloud, pipeline_grid(cloud, config), config), config);
  } else {
    seg = load_rooms(rooms_path);
  }
  const auto objects = run_objects(cloud, seg, config, nullptr);
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t k = 0; k < objects.size(); ++k) doc.push_back(to_json(objects[k], static_cast<int>(k)));
  write_json(out / "objects.json", {{"objects", doc}});
  std::printf("%zu objects -> %s\n", objects.size(), (out / "objects.json").c_str());
  return 0;
}

int cmd_objects_classify(const ConfigFlags& flags, const std::string& objects_path) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config);
  const PointCloud cloud = load_or_fail(config);
  const auto dets = load_detections(objects_path);
  const auto backend = make_pipeline_backend(config);
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const ObjectPoints raw = filter_object_points(cloud, dets[k].box, config.dbscan_params(),
                                                  derive_seed(config.seed, "object", k));
    ObjectInput in;
    in.detection = dets[k];
    in.n = static_cast<int>(raw.points.size());
    Vec3 c;
    for (const Vec3& p : raw.points) c += p;
    in.centroid = c * (1.0 / static_cast<double>(raw.points.size()));
    in.label = classify_object(normalize_points(raw.points), config.object_categories, *backend);
    doc.push_back(to_json(in, static_cast<int>(k)));
    std::printf("object %zu: %s\n", k, in.label.label.c_str());
  }
  write_json(out / "objects.json", {{"objects", doc}});
  return 0;
}

int cmd_navgraph(const ConfigFlags& flags) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config);
  const PointCloud cloud = load_or_fail(config);
  const NavResult nav = run_navigation(cloud, pipeline_grid(cloud, config), config);
  write_json(out / "navgraph.json", to_json(nav.graph));
  std::ofstream(out / "navgraph.dot") << to_dot(nav.graph);
  if (config.write_images) {
    write_pgm(out / "free.pgm", nav.maps.free);
    write_pgm(out / "eroded.pgm", nav.maps.eroded);
    write_pgm(out / "skeleton.pgm", nav.maps.skeleton);
  }
  std::printf("%zu nodes, %zu edges -> %s\n", nav.graph.nodes.size(), nav.graph.edges.size(),
              (out / "navgraph.json").c_str());
  return 0;
}

int cmd_query(const ConfigFlags& flags, const std::string& graph_path, const std::string& room,
              const std::string& object) {
  const PipelineConfig config = flags.resolve();
  const SceneGraph graph = load_graph(graph_path);
  const auto backend = make_pipeline_backend(config);
  QuerySpec q;
  if (!room.empty()) q.room_text = room;
  q.object_text = object;
  const NavTarget t = resolve_query(graph, q, *backend);
  for (const auto& w : t.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const nlohmann::json j{{"object_id", t.object_id},
                         {"room_id", t.room_id},
                         {"nav_node", t.nav_node},
                         {"position", {t.position.x, t.position.y}},
                         {"room_similarity", t.room_similarity},
                         {"object_similarity", t.object_similarity},
                         {"warnings", t.warnings}};
  std::printf("%s\n", j.dump(1).c_str());
  return 0;
}

int cmd_eval(const std::string& what, const std::string& pred_path, const std::string& gt_path,
             const std::string& out_path) {
  const nlohmann::json gt = read_json(gt_path);
  if (what == "rooms") {
    const nlohmann::json pred = read_json(pred_path);
    std::vector<ScoredMask> masks;
    if (pred.contains("version")) {
      const SceneGraph g = scene_graph_from_json(pred);
      for (const RoomNode& r : g.rooms) masks.push_back({r.room_id, r.cells, r.confidence});
    } else {
      const RoomSegmentation seg = segmentation_from_json(pred);
      for (const RegionMask& m : seg.masks) masks.push_back({m.room_id, m.cells, m.confidence});
    }
    const SegmentationMetrics m = evaluate_rooms(masks, gt);
    emit_metrics({{"ap50", m.ap50}, {"miou", m.miou}}, out_path, {{"AP50", fmt(m.ap50)}, {"mIoU", fmt(m.miou)}});
    return 0;
  }
  const SceneGraph g = load_graph(pred_path);
  if (what == "objects") {
    const DetectionMetrics a25 = evaluate_objects(g, gt, 0.25), a50 = evaluate_objects(g, gt, 0.5);
    std::vector<std::pair<std::string, std::string>> rows{{"AP25", fmt(a25.mean)}, {"AP50", fmt(a50.mean)}};
    for (const auto& [c, ap] : a50.per_class) rows.push_back({"AP50 " + c, fmt(ap)});
    emit_metrics({{"ap25", a25.mean}, {"ap50", a50.mean}, {"ap25_per_class", a25.per_class}, {"ap50_per_class", a50.per_class}},
                 out_path, rows);
    return 0;
  }
  const ClassificationReport r = evaluate_labels(g, gt);
  std::vector<std::pair<std::string, std::string>> rows{{"precision", fmt(r.precision)},
                                                        {"recall", fmt(r.recall)},
                                                        {"f1", fmt(r.f1)},
                                                        {"mAP", fmt(r.map)},
                                                        {"macro accuracy", fmt(r.macro_accuracy)}};
  emit_metrics(to_json(r), out_path, rows);
  return 0;
}

struct SynthFlags {
  std::string layout = "apartment";
  std::string out = "synth";
  std::uint64_t seed = 7;
  double door_width = 0.9;
  double cell_size = 0.05;
  double side = 4.0;
  double length = 10.0;
  double width = 2.0;
  bool no_ceiling = false;
  bool no_objects = false;
  std::vector<std::string> room_types;
};

int cmd_synth(const SynthFlags& f) {
  SynthParams p;
  p.seed = f.seed;
  p.door_width = f.door_width;
  p.cell_size = f.cell_size;
  p.ceiling = !f.no_ceiling;
  p.objects = !f.no_objects;
  if (!f.room_types.empty()) p.room_types = f.room_types;
  SynthScene scene;
  if (f.layout == "apartment") {
    scene = synth_apartment(p);
  } else if (f.layout == "duplicate") {
    if (f.room_types.empty()) p.room_types = {"hallway", "bedroom", "bedroom", "bathroom"};
    scene = synth_apartment(p);
  } else if (f.layout == "two_rooms") {
    scene = synth_two_rooms(f.side, f.door_width, p);
  } else if (f.layout == "corridor") {
    scene = synth_corridor(f.length, f.width, p);
  } else {
    throw Error(Errc::invalid_argument, "unknown layout '" + f.layout + "'");
  }
  const fs::path out = f.out;
  fs::create_directories(out);
  save_point_cloud(out / "scene.ply", scene.cloud);
  write_json(out / "gt.json", scene.ground_truth());
  PipelineConfig config;
  config.input = (out / "scene.ply").string();
  config.gt_path = (out / "gt.json").string();
  config.output = (out / "build").string();
  config.cell_size = f.cell_size;
  write_json(out / "config.json", config.to_json());
  std::printf("%zu points, %zu rooms, %zu objects -> %s\n", scene.cloud.size(), scene.plan.rooms.size(),
              scene.plan.objects.size(), out.c_str());
  return 0;
}

int cmd_snaps(const ConfigFlags& flags, const std::string& rooms_path) {
  const PipelineConfig config = flags.resolve();
  const fs::path out = ensure_output(config) / "snaps";
  fs::create_directories(out);
  const PointCloud cloud = load_or_fail(config);
  RoomSegmentation seg;
  if (rooms_path.empty()) {
    seg = run_segmentation(run_density(cloud, pipeline_grid(cloud, config), config), config);
  } else {
    seg = load_rooms(rooms_path);
  }
  for (const RegionMask& m : seg.masks) {
    const Rect r = mask_rect(seg.spec, m.cells);
    const auto views = snap_rect(cloud, r.x0, r.y0, r.x1, r.y1, config.snap_margin, config.snap_params());
    const fs::path p = out / ("room_" + std::to_string(m.room_id) + ".png");
    write_png(p, contact_sheet(views, 4));
    std::printf("room %d -> %s\n", m.room_id, p.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud to hierarchical scene graph"};
  app.require_subcommand(1);

  ConfigFlags build_flags;
  auto* build = app.add_subcommand("build", "Run the full pipeline");
  build_flags.attach(build);

  auto* rooms = app.add_subcommand("rooms", "Room segmentation and classification");
  rooms->require_subcommand(1);
  ConfigFlags seg_flags, cls_flags;
  std::string rooms_path;
  auto* rooms_segment = rooms->add_subcommand("segment", "Segment rooms from the density map");
  seg_flags.attach(rooms_segment);
  auto* rooms_classify = rooms->add_subcommand("classify", "Label segmented rooms");
  cls_flags.attach(rooms_classify);
  rooms_classify->add_option("--rooms", rooms_path, "rooms.json from 'rooms segment'")->required()->check(CLI::ExistingFile);

  auto* objects = app.add_subcommand("objects", "Object detection and classification");
  objects->require_subcommand(1);
  ConfigFlags det_flags, ocls_flags;
  std::string det_rooms, objects_path;
  auto* objects_detect = objects->add_subcommand("detect", "Propose object boxes per room");
  det_flags.attach(objects_detect);
  objects_detect->add_option("--rooms", det_rooms, "rooms.json (segmented on the fly when absent)")->check(CLI::ExistingFile);
  auto* objects_classify = objects->add_subcommand("classify", "Label object boxes");
  ocls_flags.attach(objects_classify);
  objects_classify->add_option("--objects", objects_path, "objects.json from 'objects detect'")->required()->check(CLI::ExistingFile);

  auto* navgraph = app.add_subcommand("navgraph", "Navigation graph");
  navgraph->require_subcommand(1);
  ConfigFlags nav_flags;
  auto* nav_build = navgraph->add_subcommand("build", "Build the navigation graph");
  nav_flags.attach(nav_build);

  ConfigFlags query_flags;
  std::string graph_path, room_text, object_text;
  auto* query = app.add_subcommand("query", "Resolve a room/object query to a navigation target");
  query_flags.attach(query);
  query->add_option("--graph", graph_path, "scene_graph.json")->required()->check(CLI::ExistingFile);
  query->add_option("--room", room_text, "room description");
  query->add_option("--object", object_text, "object description")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->require_subcommand(1);
  std::string pred_path, gt_path, metrics_out;
  for (const char* what : {"rooms", "objects", "labels"}) {
    auto* sub = eval->add_subcommand(what, std::string("Evaluate ") + what);
    sub->add_option("--pred", pred_path, "prediction JSON (scene_graph.json; rooms.json also accepted for rooms)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--gt", gt_path, "ground-truth JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", metrics_out, "write metrics JSON here");
  }

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  synth->add_option("--layout", synth_flags.layout, "apartment | duplicate | two_rooms | corridor")
      ->check(CLI::IsMember({"apartment", "duplicate", "two_rooms", "corridor"}));
  synth->add_option("--out", synth_flags.out, "output directory");
  synth->add_option("--seed", synth_flags.seed);
  synth->add_option("--door_width", synth_flags.door_width);
  synth->add_option("--cell_size", synth_flags.cell_size);
  synth->add_option("--side", synth_flags.side, "room side for two_rooms");
  synth->add_option("--length", synth_flags.length, "corridor length");
  synth->add_option("--width", synth_flags.width, "corridor width");
  synth->add_option("--room_types", synth_flags.room_types, "hallway, left, middle, right")->delimiter(',');
  synth->add_flag("--no_ceiling", synth_flags.no_ceiling);
  synth->add_flag("--no_objects", synth_flags.no_objects);

  ConfigFlags snap_flags;
  std::string snap_rooms;
  auto* snaps = app.add_subcommand("snaps", "Write per-room snapshot contact sheets");
  snap_flags.attach(snaps);
  snaps->add_option("--rooms", snap_rooms, "rooms.json (segmented on the fly when absent)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build(build_flags);
    if (*rooms_segment) return cmd_rooms_segment(seg_flags);
    if (*rooms_classify) return cmd_rooms_classify(cls_flags, rooms_path);
    if (*objects_detect) return cmd_objects_detect(det_flags, det_rooms);
    if (*objects_classify) return cmd_objects_classify(ocls_flags, objects_path);
    if (*nav_build) return cmd_navgraph(nav_flags);
    if (*query) return cmd_query(query_flags, graph_path, room_text, object_text);
    for (const char* what : {"rooms", "objects", "labels"})
      if (eval->got_subcommand(what)) return cmd_eval(what, pred_path, gt_path, metrics_out);
    if (*synth) return cmd_synth(synth_flags);
    if (*snaps) return cmd_snaps(snap_flags, snap_rooms);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
