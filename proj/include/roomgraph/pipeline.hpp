#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomgraph/densitymap.hpp"
#include "roomgraph/embedding.hpp"
#include "roomgraph/eval.hpp"
#include "roomgraph/lookup.hpp"
#include "roomgraph/navgraph.hpp"
#include "roomgraph/objects.hpp"
#include "roomgraph/roomseg.hpp"
#include "roomgraph/scenegraph.hpp"
#include "roomgraph/snap.hpp"
#include "roomgraph/synth.hpp"

namespace roomgraph {

/// Every tunable of the pipeline in one flat record; JSON keys equal the
/// field names.
struct PipelineConfig {
  std::string input;
  std::string output = "out";
  std::string gt_path;
  bool swap_yz = false;
  std::uint64_t seed = 0;

  std::string backend = "stub";  // stub | remote
  std::string embed_url;
  int remote_max_in_flight = 4;
  int remote_retries = 2;
  double remote_timeout = 30.0;
  bool plant_signatures = true;  // stub only: pin text anchors for the synthetic fixtures

  double cell_size = 0.05;
  int num_slices = 12;
  double delta_b = 1.0 / 15.0;
  double delta_t = 1.0 / 5.0;
  double gamma = 0.9;
  double vote_fraction = 0.75;
  double density_norm_percentile = 95.0;

  double wall_threshold = 0.15;
  double seed_distance = 0.6;
  double min_area = 1.5;
  double min_wall_area = 0.5;

  int num_views = 8;
  int image_width = 336;
  int image_height = 336;
  int splat_radius = 2;
  double eye_height = 1.5;
  std::optional<double> z_c;
  double vfov = 1.047;
  bool pull_inward = false;
  double snap_margin = 0.25;
  std::optional<int> k;
  int kmeans_max_iters = 50;

  double plane_margin = 0.05;
  double plane_coverage = 0.3;
  double link_radius = 0.10;
  int box_min_pts = 10;
  double min_extent = 0.05;
  double box_pad = 0.02;
  int wall_margin_cells = 1;
  double eps = 0.08;
  int min_pts = 10;
  int n = 1024;

  double h_robot = 1.2;
  double robot_radius = 0.3;
  double trim_len = 0.5;
  double d_sep = 0.2;
  double floor_clearance = 0.1;
  double min_separation_ratio = 0.8;

  std::vector<std::string> room_categories{"bathroom", "bedroom", "classroom", "hallway", "kitchen", "office"};
  std::vector<std::string> object_categories{"floor lamp", "table", "water station"};
  bool write_images = true;

  nlohmann::json to_json() const;
  /// Keys absent from `j` keep the values of `base`; unknown keys are errors.
  static PipelineConfig from_json(const nlohmann::json& j, const PipelineConfig& base);
  static PipelineConfig from_json(const nlohmann::json& j);
  void validate() const;
  /// FNV-1a over the canonical JSON of every key except input/output/gt paths.
  std::string hash() const;

  LayerSelectParams layer_params() const;
  CombineParams combine_params() const;
  RegionDetectParams region_params() const;
  SnapParams snap_params() const;
  LookupParams lookup_params(std::uint64_t seed) const;
  BoxDetectParams box_params() const;
  DbscanParams dbscan_params() const;
  NavParams nav_params() const;
  RemoteConfig remote_config() const;
};

/// Independent, reproducible RNG seed for one unit of work.
std::uint64_t derive_seed(std::uint64_t global, const std::string& tag, std::uint64_t id);

/// Backend named by the config; the stub gets fixture signatures planted
/// when plant_signatures is set.
std::unique_ptr<EmbeddingBackend> make_pipeline_backend(const PipelineConfig& config);

/// Pins stub text anchors: room types to the mean snapshot embedding of
/// canonical rooms in their style, object archetypes to the point embedding
/// the object pipeline produces for a canonical instance.
void plant_fixture_signatures(StubBackend& stub, const PipelineConfig& config);

PointCloud load_input(const PipelineConfig& config);

/// Pipeline grid over the cloud: AABB padded by one cell.
GridSpec pipeline_grid(const PointCloud& cloud, const PipelineConfig& config);

DensityMaps run_density(const PointCloud& cloud, const GridSpec& spec, const PipelineConfig& config);
RoomSegmentation run_segmentation(const DensityMaps& maps, const PipelineConfig& config);

/// xy extent of a mask, cell edges included.
Rect mask_rect(const GridSpec& spec, const std::vector<std::size_t>& cells);

struct RoomClassification {
  RoomLabelResult result;
  std::vector<RgbImage> views;
};
RoomClassification classify_room_views(const PointCloud& cloud, const GridSpec& spec, const RegionMask& mask,
                                       const PipelineConfig& config, const EmbeddingBackend& backend);

/// Wall mask grown by wall_margin_cells, used to keep wall remnants out of
/// object proposals.
BinaryGrid object_wall_mask(const RoomSegmentation& seg, int margin_cells);

/// Detection, filtering and (when `classify`) labelling for every room;
/// output ordered by room id, then detection order.
std::vector<ObjectInput> run_objects(const PointCloud& cloud, const RoomSegmentation& seg, const PipelineConfig& config,
                                     const EmbeddingBackend* backend);

struct NavResult {
  NavGraph graph;
  NavMaps maps;
};
NavResult run_navigation(const PointCloud& cloud, const GridSpec& spec, const PipelineConfig& config);

/// Room AP50/mIoU, object AP25/AP50 per class, and room-label report.
nlohmann::json evaluate_scene(const SceneGraph& graph, const nlohmann::json& ground_truth);

/// Room-label predictions aligned to ground-truth rooms by best mask IoU.
ClassificationReport evaluate_labels(const SceneGraph& graph, const nlohmann::json& ground_truth);
SegmentationMetrics evaluate_rooms(const std::vector<ScoredMask>& predictions, const nlohmann::json& ground_truth);
DetectionMetrics evaluate_objects(const SceneGraph& graph, const nlohmann::json& ground_truth, double iou_threshold);

nlohmann::json to_json(const ClassificationReport& report);
nlohmann::json to_json(const RoomLabelResult& result);
nlohmann::json to_json(const ObjectInput& object, int object_id);

/// Failure of one named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "stage '" + stage + "' failed: " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct BuildResult {
  SceneGraph graph;
  std::vector<StageRecord> stages;
  std::optional<nlohmann::json> metrics;
  std::vector<std::string> warnings;
};

/// Full pipeline; writes artifacts under config.output, including
/// run_status.json on success and on failure. Throws StageError.
BuildResult build_scene_graph(const PipelineConfig& config, const EmbeddingBackend& backend);

/// JSON pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace roomgraph
