#include "roomgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "roomgraph/image_io.hpp"
#include "roomgraph/ply.hpp"

namespace roomgraph {

namespace fs = std::filesystem;

namespace {

// Applies `f(key, field)` to every configuration field. The same listing
// drives serialization, parsing and hashing, so a new field cannot be
// forgotten by one of them.
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
  f("input", c.input);
  f("output", c.output);
  f("gt_path", c.gt_path);
  f("swap_yz", c.swap_yz);
  f("seed", c.seed);
  f("backend", c.backend);
  f("embed_url", c.embed_url);
  f("remote_max_in_flight", c.remote_max_in_flight);
  f("remote_retries", c.remote_retries);
  f("remote_timeout", c.remote_timeout);
  f("plant_signatures", c.plant_signatures);
  f("cell_size", c.cell_size);
  f("num_slices", c.num_slices);
  f("delta_b", c.delta_b);
  f("delta_t", c.delta_t);
  f("gamma", c.gamma);
  f("vote_fraction", c.vote_fraction);
  f("density_norm_percentile", c.density_norm_percentile);
  f("wall_threshold", c.wall_threshold);
  f("seed_distance", c.seed_distance);
  f("min_area", c.min_area);
  f("min_wall_area", c.min_wall_area);
  f("num_views", c.num_views);
  f("image_width", c.image_width);
  f("image_height", c.image_height);
  f("splat_radius", c.splat_radius);
  f("eye_height", c.eye_height);
  f("z_c", c.z_c);
  f("vfov", c.vfov);
  f("pull_inward", c.pull_inward);
  f("snap_margin", c.snap_margin);
  f("k", c.k);
  f("kmeans_max_iters", c.kmeans_max_iters);
  f("plane_margin", c.plane_margin);
  f("plane_coverage", c.plane_coverage);
  f("link_radius", c.link_radius);
  f("box_min_pts", c.box_min_pts);
  f("min_extent", c.min_extent);
  f("box_pad", c.box_pad);
  f("wall_margin_cells", c.wall_margin_cells);
  f("eps", c.eps);
  f("min_pts", c.min_pts);
  f("n", c.n);
  f("h_robot", c.h_robot);
  f("robot_radius", c.robot_radius);
  f("trim_len", c.trim_len);
  f("d_sep", c.d_sep);
  f("floor_clearance", c.floor_clearance);
  f("min_separation_ratio", c.min_separation_ratio);
  f("room_categories", c.room_categories);
  f("object_categories", c.object_categories);
  f("write_images", c.write_images);
}

template <class T>
void put(nlohmann::json& j, const char* key, const T& v) {
  j[key] = v;
}
template <class T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& v) {
  v = j.get<T>();
  (void)key;
}
template <class T>
void take(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (j.is_null()) {
    v.reset();
  } else {
    v = j.get<T>();
  }
  (void)key;
}

const std::set<std::string> kPathKeys{"input", "output", "gt_path"};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invalid_argument, "config: " + what);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec3 mean_of(std::span<const Vec3> pts) {
  Vec3 s;
  for (const Vec3& p : pts) s += p;
  return pts.empty() ? s : s * (1.0 / static_cast<double>(pts.size()));
}

EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vs) {
  std::vector<double> acc(vs.front().dim(), 0.0);
  for (const auto& v : vs)
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v[d];
  return EmbeddingVector::normalized(std::move(acc));
}

// Points of the room cloud inside the box, run through clustering,
// resampling and normalization.
struct FilteredObject {
  ObjectPoints normalized;
  Vec3 centroid;
};

FilteredObject filter_and_normalize(const PointCloud& room_cloud, const Box3& box, const DbscanParams& params,
                                    std::uint64_t seed) {
  ObjectPoints raw = filter_object_points(room_cloud, box, params, seed);
  FilteredObject out;
  out.centroid = mean_of(raw.points);
  out.normalized = normalize_points(raw.points);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(*this, [&](const char* key, const auto& v) { put(j, key, v); });
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const PipelineConfig& base) {
  if (!j.is_object()) throw Error(Errc::schema, "config: expected a JSON object");
  PipelineConfig c = base;
  std::set<std::string> known;
  visit_fields(c, [&](const char* key, auto& v) {
    known.insert(key);
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      take(*it, key, v);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::schema, std::string("config key '") + key + "': " + e.what());
    }
  });
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw Error(Errc::schema, "config: unknown key '" + item.key() + "'");
  return c;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) { return from_json(j, PipelineConfig{}); }

void PipelineConfig::validate() const {
  require(backend == "stub" || backend == "remote", "backend must be 'stub' or 'remote'");
  require(remote_max_in_flight >= 1, "remote_max_in_flight must be >= 1");
  require(remote_retries >= 0, "remote_retries must be >= 0");
  require(remote_timeout > 0.0, "remote_timeout must be positive");
  require(std::isfinite(cell_size) && cell_size > 0.0, "cell_size must be positive");
  require(room_categories.size() >= 1, "room_categories must not be empty");
  require(object_categories.size() >= 1, "object_categories must not be empty");
  require(snap_margin >= 0.0, "snap_margin must be >= 0");
  require(wall_margin_cells >= 0, "wall_margin_cells must be >= 0");
  require(box_pad >= 0.0, "box_pad must be >= 0");
  require(!k || *k >= 1, "k must be >= 1");
  require(kmeans_max_iters >= 1, "kmeans_max_iters must be >= 1");
  layer_params().validate();
  combine_params().validate();
  region_params().validate();
  snap_params().validate();
  box_params().validate();
  dbscan_params().validate();
  nav_params().validate();
}

std::string PipelineConfig::hash() const {
  nlohmann::json j = to_json();
  for (const auto& key : kPathKeys) j.erase(key);
  return hex64(fnv1a64(j.dump()));
}

LayerSelectParams PipelineConfig::layer_params() const { return {num_slices, delta_b, delta_t}; }

CombineParams PipelineConfig::combine_params() const { return {gamma, vote_fraction, density_norm_percentile}; }

RegionDetectParams PipelineConfig::region_params() const {
  return {wall_threshold, seed_distance, min_area, min_wall_area};
}

SnapParams PipelineConfig::snap_params() const {
  SnapParams p;
  p.num_views = num_views;
  p.width = image_width;
  p.height = image_height;
  p.splat_radius = splat_radius;
  p.eye_height = eye_height;
  p.fixed_z = z_c;
  p.vfov = vfov;
  p.pull_inward = pull_inward;
  return p;
}

LookupParams PipelineConfig::lookup_params(std::uint64_t unit_seed) const { return {k, kmeans_max_iters, unit_seed}; }

BoxDetectParams PipelineConfig::box_params() const {
  return {plane_margin, plane_coverage, link_radius, box_min_pts, min_extent, box_pad};
}

DbscanParams PipelineConfig::dbscan_params() const { return {eps, min_pts, n}; }

NavParams PipelineConfig::nav_params() const {
  return {h_robot, robot_radius, trim_len, d_sep, floor_clearance, min_separation_ratio};
}

RemoteConfig PipelineConfig::remote_config() const {
  RemoteConfig r;
  r.url = resolve_embed_url(embed_url);
  r.max_in_flight = remote_max_in_flight;
  r.retries = remote_retries;
  r.timeout_seconds = remote_timeout;
  return r;
}

std::uint64_t derive_seed(std::uint64_t global, const std::string& tag, std::uint64_t id) {
  std::uint64_t state = fnv1a64(tag, global ^ 0xcbf29ce484222325ull) ^ (id * 0x9e3779b97f4a7c15ull);
  return splitmix64(state);
}

// ---------------------------------------------------------------------------
// Backends

std::unique_ptr<EmbeddingBackend> make_pipeline_backend(const PipelineConfig& config) {
  if (config.backend == "remote") {
    RemoteConfig remote = config.remote_config();
    if (remote.url.empty())
      throw Error(Errc::invalid_argument, "remote backend needs embed_url or ROOMGRAPH_EMBED_URL");
    return make_backend("remote", remote);
  }
  auto stub = std::make_unique<StubBackend>();
  if (config.plant_signatures) plant_fixture_signatures(*stub, config);
  return stub;
}

void plant_fixture_signatures(StubBackend& stub, const PipelineConfig& config) {
  SynthParams synth;
  synth.cell_size = config.cell_size;
  synth.objects = false;
  const SnapParams snap = config.snap_params();

  // Rooms: mean view embedding over a few footprints so that neither size
  // nor aspect ratio dominates the anchor.
  const std::vector<std::pair<double, double>> sizes{{3.0, 3.0}, {4.5, 3.0}, {3.0, 4.5}};
  for (const auto& type : config.room_categories) {
    std::vector<EmbeddingVector> views;
    for (const auto& [w, d] : sizes) {
      const SynthScene scene = synth_single_room(type, w, d, synth);
      const Rect r = scene.plan.rooms.front().rect;
      for (const RgbImage& img : snap_rect(scene.cloud, r.x0, r.y0, r.x1, r.y1, config.snap_margin, snap))
        views.push_back(stub.embed_image(img));
    }
    stub.plant(type, mean_embedding(views));
  }

  // Objects: the embedding the object stage produces for an instance
  // standing alone on a floor patch.
  const DbscanParams dbp = config.dbscan_params();
  const BoxDetectParams bp = config.box_params();
  for (const auto& label : config.object_categories) {
    const auto archetypes = object_archetypes();
    if (std::find(archetypes.begin(), archetypes.end(), label) == archetypes.end()) continue;
    PointCloud cloud;
    for (double x = -1.5; x <= 1.5 + 1e-9; x += synth.spacing)
      for (double y = -1.5; y <= 1.5 + 1e-9; y += synth.spacing) cloud.add({x, y, 0.0}, {128, 128, 128});
    const PointCloud obj = archetype_points(label, 0.0, 0.0, synth.spacing);
    for (std::size_t k = 0; k < obj.size(); ++k) cloud.add(obj.points[k], obj.colors.empty() ? Rgb{128, 128, 128} : obj.colors[k]);
    const Box3 truth = archetype_box(label, 0.0, 0.0);
    const auto dets = detect_boxes(cloud, bp);
    const Detection* best = nullptr;
    double best_iou = 0.0;
    for (const auto& d : dets) {
      const double iou = box_iou(d.box, truth);
      if (iou > best_iou) {
        best_iou = iou;
        best = &d;
      }
    }
    const Box3 box = best ? best->box : truth;
    const auto filtered = filter_and_normalize(cloud, box, dbp, derive_seed(config.seed, "anchor:" + label, 0));
    stub.plant(label, stub.embed_points(filtered.normalized.points));
  }
}

// ---------------------------------------------------------------------------
// Stages

PointCloud load_input(const PipelineConfig& config) {
  if (config.input.empty()) throw Error(Errc::invalid_argument, "no input point cloud given");
  PointCloud cloud = load_point_cloud(config.input);
  if (config.swap_yz) cloud = swap_yz(std::move(cloud));
  cloud.validate();
  if (cloud.empty()) throw Error(Errc::degenerate, "input point cloud is empty: " + config.input);
  return cloud;
}

GridSpec pipeline_grid(const PointCloud& cloud, const PipelineConfig& config) {
  return GridSpec::covering(cloud, config.cell_size, 1);
}

DensityMaps run_density(const PointCloud& cloud, const GridSpec& spec, const PipelineConfig& config) {
  return build_density_maps(cloud, spec, config.layer_params(), config.combine_params());
}

RoomSegmentation run_segmentation(const DensityMaps& maps, const PipelineConfig& config) {
  return MorphologicalRegionDetector(config.region_params()).detect(maps.combined);
}

Rect mask_rect(const GridSpec& spec, const std::vector<std::size_t>& cells) {
  if (cells.empty()) throw Error(Errc::invalid_argument, "empty room mask");
  int i0 = std::numeric_limits<int>::max(), j0 = i0, i1 = std::numeric_limits<int>::min(), j1 = i1;
  for (std::size_t c : cells) {
    const Cell cell = spec.cell(c);
    i0 = std::min(i0, cell.i);
    j0 = std::min(j0, cell.j);
    i1 = std::max(i1, cell.i);
    j1 = std::max(j1, cell.j);
  }
  return {spec.origin_x + i0 * spec.cell_size, spec.origin_y + j0 * spec.cell_size,
          spec.origin_x + (i1 + 1) * spec.cell_size, spec.origin_y + (j1 + 1) * spec.cell_size};
}

RoomClassification classify_room_views(const PointCloud& cloud, const GridSpec& spec, const RegionMask& mask,
                                       const PipelineConfig& config, const EmbeddingBackend& backend) {
  const Rect r = mask_rect(spec, mask.cells);
  RoomClassification out;
  out.views = snap_rect(cloud, r.x0, r.y0, r.x1, r.y1, config.snap_margin, config.snap_params());
  std::vector<EmbeddingVector> embeddings;
  embeddings.reserve(out.views.size());
  for (const RgbImage& img : out.views) embeddings.push_back(backend.embed_image(img));
  const auto reps = kmeans_representatives(
      embeddings, config.lookup_params(derive_seed(config.seed, "room", static_cast<std::uint64_t>(mask.room_id))));
  out.result = classify_room(reps, config.room_categories, backend);
  return out;
}

BinaryGrid object_wall_mask(const RoomSegmentation& seg, int margin_cells) {
  const BinaryGrid& wall = seg.wall_mask;
  BinaryGrid out(wall.spec, 0);
  const int w = wall.width(), h = wall.height();
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (!wall.at(i, j)) continue;
      for (int dj = -margin_cells; dj <= margin_cells; ++dj)
        for (int di = -margin_cells; di <= margin_cells; ++di)
          if (wall.spec.contains(i + di, j + dj)) out.at(i + di, j + dj) = 1;
    }
  return out;
}

std::vector<ObjectInput> run_objects(const PointCloud& cloud, const RoomSegmentation& seg, const PipelineConfig& config,
                                     const EmbeddingBackend* backend) {
  const BinaryGrid walls = object_wall_mask(seg, config.wall_margin_cells);
  const auto rooms = extract_rooms(cloud, seg);
  const BoxDetectParams bp = config.box_params();
  const DbscanParams dbp = config.dbscan_params();

  std::vector<std::vector<ObjectInput>> per_room(rooms.size());
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    const auto& [room_id, room_cloud] = rooms[r];
    if (room_cloud.empty()) continue;
    const auto dets = detect_boxes(room_cloud, bp, &walls);
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const std::uint64_t unit = (static_cast<std::uint64_t>(room_id) << 32) | k;
      const auto f = filter_and_normalize(room_cloud, dets[k].box, dbp, derive_seed(config.seed, "object", unit));
      ObjectInput in;
      in.detection = dets[k];
      in.centroid = f.centroid;
      in.n = static_cast<int>(f.normalized.points.size());
      if (backend) in.label = classify_object(f.normalized, config.object_categories, *backend);
      per_room[r].push_back(std::move(in));
    }
  }
  std::vector<ObjectInput> out;
  for (auto& v : per_room)
    for (auto& o : v) out.push_back(std::move(o));
  return out;
}

NavResult run_navigation(const PointCloud& cloud, const GridSpec& spec, const PipelineConfig& config) {
  const NavParams params = config.nav_params();
  NavResult out;
  const BinaryGrid free = build_free_space_map(cloud, params, spec);
  out.graph = build_navgraph(free, params, &out.maps);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

// Ground-truth cells re-expressed on `target` through their cell centers.
std::vector<std::size_t> remap_cells(const std::vector<std::size_t>& cells, const GridSpec& from, const GridSpec& target) {
  if (from == target) return cells;
  std::vector<std::size_t> out;
  for (std::size_t c : cells) {
    const Cell cell = from.cell(c);
    if (auto t = target.cell_of(from.center_x(cell.i), from.center_y(cell.j))) out.push_back(target.index(t->i, t->j));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> gt_room_cells(const GroundTruth& gt, const GridSpec& target) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& cells : gt.room_cells) out.push_back(remap_cells(cells, gt.spec, target));
  return out;
}

}  // namespace

SegmentationMetrics evaluate_rooms(const std::vector<ScoredMask>& predictions, const nlohmann::json& ground_truth) {
  const GroundTruth gt = ground_truth_from_json(ground_truth);
  return segmentation_metrics(predictions, gt.room_cells, 0.5);
}

namespace {

std::vector<ScoredMask> scored_masks(const SceneGraph& graph) {
  std::vector<ScoredMask> out;
  for (const RoomNode& r : graph.rooms) out.push_back({r.room_id, r.cells, r.confidence});
  return out;
}

}  // namespace

DetectionMetrics evaluate_objects(const SceneGraph& graph, const nlohmann::json& ground_truth, double iou_threshold) {
  const GroundTruth gt = ground_truth_from_json(ground_truth);
  std::map<std::string, std::vector<ScoredBox>> preds;
  std::map<std::string, std::vector<Box3>> truth;
  for (const ObjectNode& o : graph.objects) preds[o.label].push_back({o.box, o.score});
  for (std::size_t k = 0; k < gt.object_labels.size(); ++k) truth[gt.object_labels[k]].push_back(gt.object_boxes[k]);
  return detection_ap(preds, truth, iou_threshold);
}

ClassificationReport evaluate_labels(const SceneGraph& graph, const nlohmann::json& ground_truth) {
  const GroundTruth gt = ground_truth_from_json(ground_truth);
  const auto truth_cells = gt_room_cells(gt, graph.floor.grid);
  std::vector<LabelPrediction> preds;
  for (const auto& cells : truth_cells) {
    const RoomNode* best = nullptr;
    double best_iou = 0.0;
    for (const RoomNode& r : graph.rooms) {
      const double iou = mask_iou(r.cells, cells);
      if (iou > best_iou) {
        best_iou = iou;
        best = &r;
      }
    }
    LabelPrediction p;
    if (best) {
      p.label = best->label;
      auto it = best->similarities.find(best->label);
      p.confidence = it == best->similarities.end() ? 0.0 : it->second;
    } else {
      p.label = "";
      p.confidence = 0.0;
    }
    preds.push_back(p);
  }
  return classification_report(preds, gt.room_labels);
}

nlohmann::json to_json(const ClassificationReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [name, s] : report.per_class)
    per_class[name] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"ap", s.ap}, {"support", s.support}};
  nlohmann::json confusion = nlohmann::json::object();
  for (const auto& [truth, row] : report.confusion)
    for (const auto& [pred, count] : row) confusion[truth][pred] = count;
  return {{"precision", report.precision}, {"recall", report.recall},       {"f1", report.f1},
          {"map", report.map},             {"macro_accuracy", report.macro_accuracy}, {"per_class", per_class},
          {"confusion", confusion}};
}

nlohmann::json evaluate_scene(const SceneGraph& graph, const nlohmann::json& ground_truth) {
  const GroundTruth gt = ground_truth_from_json(ground_truth);
  const auto seg = segmentation_metrics(scored_masks(graph), gt_room_cells(gt, graph.floor.grid), 0.5);
  const auto ap25 = evaluate_objects(graph, ground_truth, 0.25);
  const auto ap50 = evaluate_objects(graph, ground_truth, 0.5);
  return {{"rooms", {{"ap50", seg.ap50}, {"miou", seg.miou}, {"predicted", graph.rooms.size()}, {"ground_truth", gt.room_cells.size()}}},
          {"objects",
           {{"ap25", ap25.mean},
            {"ap50", ap50.mean},
            {"ap25_per_class", ap25.per_class},
            {"ap50_per_class", ap50.per_class},
            {"predicted", graph.objects.size()},
            {"ground_truth", gt.object_boxes.size()}}},
          {"labels", to_json(evaluate_labels(graph, ground_truth))}};
}

// ---------------------------------------------------------------------------
// Artifacts

nlohmann::json to_json(const RoomLabelResult& result) {
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t i = 0; i < result.matrix.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < result.matrix.cols; ++j) row.push_back(result.matrix.at(i, j));
    matrix.push_back(row);
  }
  return {{"label", result.label},
          {"votes", result.votes},
          {"mean_similarity", result.mean_similarity},
          {"per_view_predictions", result.per_view_predictions},
          {"categories", result.categories},
          {"similarity", matrix}};
}

nlohmann::json to_json(const ObjectInput& object, int object_id) {
  const Box3& b = object.detection.box;
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& [name, score] : object.label.ranked) ranked.push_back({name, score});
  return {{"object_id", object_id},
          {"box", {{"center", {b.center.x, b.center.y, b.center.z}}, {"size", {b.size.x, b.size.y, b.size.z}}, {"yaw", b.yaw}}},
          {"score", object.detection.score},
          {"label", object.label.label},
          {"ranked", ranked},
          {"centroid", {object.centroid.x, object.centroid.y, object.centroid.z}},
          {"n", object.n}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, path.string() + ": " + e.what());
  }
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
}

class Runner {
 public:
  Runner(const PipelineConfig& config, BuildResult& result) : config_(config), result_(result) {
    stamp_ = {{"config_hash", config.hash()}, {"seed", config.seed}};
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    StageRecord rec{name, 0.0, false, ""};
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        finish(rec, t0);
      } else {
        auto value = f();
        finish(rec, t0);
        return value;
      }
    } catch (const Error& e) {
      fail(rec, t0, e.what());
      throw StageError(name, e);
    } catch (const std::exception& e) {
      fail(rec, t0, e.what());
      throw StageError(name, Error(Errc::io, e.what()));
    }
  }

  // JSON artifact carrying the run stamp.
  void artifact(const std::string& file, nlohmann::json j) {
    j["stamp"] = stamp_;
    write_json(fs::path(config_.output) / file, j);
    files_.push_back(file);
  }
  void artifact_text(const std::string& file, const std::string& text) {
    write_text(fs::path(config_.output) / file, text);
    files_.push_back(file);
  }
  void image(const std::string& file, const std::function<void(const fs::path&)>& writer) {
    if (!config_.write_images) return;
    const fs::path p = fs::path(config_.output) / file;
    fs::create_directories(p.parent_path());
    writer(p);
    files_.push_back(file);
  }

  void write_status(bool ok, const std::string& error) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : result_.stages)
      stages.push_back({{"name", s.name}, {"seconds", s.seconds}, {"ok", s.ok}, {"error", s.error}});
    nlohmann::json status{{"ok", ok},           {"partial", !ok},   {"error", error}, {"stages", stages},
                          {"stamp", stamp_},    {"warnings", result_.warnings}};
    write_json(fs::path(config_.output) / "run_status.json", status);
    nlohmann::json manifest{{"stamp", stamp_}, {"files", files_}, {"complete", ok}};
    write_json(fs::path(config_.output) / "manifest.json", manifest);
  }

 private:
  void finish(StageRecord& rec, std::chrono::steady_clock::time_point t0) {
    rec.ok = true;
    rec.seconds = seconds_since(t0);
    result_.stages.push_back(rec);
  }
  void fail(StageRecord& rec, std::chrono::steady_clock::time_point t0, const std::string& msg) {
    rec.seconds = seconds_since(t0);
    rec.error = msg;
    result_.stages.push_back(rec);
  }

  const PipelineConfig& config_;
  BuildResult& result_;
  nlohmann::json stamp_;
  std::vector<std::string> files_;

};

}  // namespace

BuildResult build_scene_graph(const PipelineConfig& config, const EmbeddingBackend& backend) {
  config.validate();
  const fs::path out = config.output;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error(Errc::io, "cannot create output directory " + out.string());

  BuildResult result;
  Runner run(config, result);
  write_json(out / "effective_config.json", config.to_json());

  try {
    const PointCloud cloud = run.stage("load", [&] { return load_input(config); });
    const Aabb3 bounds = Aabb3::of(cloud.points);
    const GridSpec spec = pipeline_grid(cloud, config);

    const DensityMaps maps = run.stage("density", [&] {
      DensityMaps m = run_density(cloud, spec, config);
      if (m.empty_selection) result.warnings.push_back("no z-slice passed the coverage window; border map is empty");
      run.image("maps/density.pgm", [&](const fs::path& p) { write_pgm(p, m.density); });
      run.image("maps/border.pgm", [&](const fs::path& p) { write_pgm(p, m.border); });
      run.image("maps/combined.pgm", [&](const fs::path& p) { write_pgm(p, m.combined); });
      run.image("maps/combined.png", [&](const fs::path& p) { write_png(p, grid_image(m.combined)); });
      nlohmann::json layers{{"occupied", m.stats.occupied}, {"total", m.stats.total}, {"selected", m.stats.selected}};
      run.artifact("layers.json", layers);
      return m;
    });

    const RoomSegmentation seg = run.stage("segment", [&] {
      RoomSegmentation s = run_segmentation(maps, config);
      if (s.masks.empty()) throw Error(Errc::degenerate, "no rooms detected");
      run.artifact("rooms.json", to_json(s));
      const auto labels = s.label_raster();
      run.image("maps/rooms.png", [&](const fs::path& p) { write_png(p, label_image(s.spec, labels)); });
      return s;
    });

    const std::vector<RoomLabelResult> labels = run.stage("classify_rooms", [&] {
      std::vector<RoomLabelResult> ls;
      nlohmann::json doc = nlohmann::json::array();
      for (const RegionMask& m : seg.masks) {
        RoomClassification rc = classify_room_views(cloud, spec, m, config, backend);
        run.image("snaps/room_" + std::to_string(m.room_id) + ".png",
                  [&](const fs::path& p) { write_png(p, contact_sheet(rc.views, 4)); });
        nlohmann::json j = to_json(rc.result);
        j["room_id"] = m.room_id;
        doc.push_back(j);
        ls.push_back(std::move(rc.result));
      }
      run.artifact("room_labels.json", {{"rooms", doc}});
      return ls;
    });

    const std::vector<ObjectInput> objects = run.stage("objects", [&] {
      auto os = run_objects(cloud, seg, config, &backend);
      nlohmann::json doc = nlohmann::json::array();
      for (std::size_t k = 0; k < os.size(); ++k) doc.push_back(to_json(os[k], static_cast<int>(k)));
      run.artifact("objects.json", {{"objects", doc}});
      return os;
    });

    const NavResult nav = run.stage("navgraph", [&] {
      NavResult n = run_navigation(cloud, spec, config);
      run.artifact("navgraph.json", to_json(n.graph));
      run.artifact_text("navgraph.dot", to_dot(n.graph));
      run.image("maps/free.pgm", [&](const fs::path& p) { write_pgm(p, n.maps.free); });
      run.image("maps/eroded.pgm", [&](const fs::path& p) { write_pgm(p, n.maps.eroded); });
      run.image("maps/skeleton.pgm", [&](const fs::path& p) { write_pgm(p, n.maps.skeleton); });
      return n;
    });

    result.graph = run.stage("assemble", [&] {
      SceneGraph g = assemble_graph(seg, labels, objects, nav.graph, nav.maps.eroded, bounds.min.z, bounds.max.z);
      g.config_hash = config.hash();
      g.seed = config.seed;
      run.artifact_text("scene_graph.json", serialize(g));
      run.artifact_text("scene_graph.dot", to_dot(g));
      return g;
    });

    if (!config.gt_path.empty()) {
      result.metrics = run.stage("metrics", [&] {
        nlohmann::json m = evaluate_scene(result.graph, read_json(config.gt_path));
        run.artifact("metrics.json", m);
        return m;
      });
    }
    for (const auto& w : backend.warnings()) result.warnings.push_back(w);
  } catch (const StageError& e) {
    run.write_status(false, e.what());
    throw;
  }
  run.write_status(true, "");
  return result;
}

}  // namespace roomgraph
