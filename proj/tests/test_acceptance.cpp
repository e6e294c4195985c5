// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. argv[1] is the path of the roomgraph CLI.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "embed_server.hpp"
#include "oracles.hpp"
#include "roomgraph/densitymap.hpp"
#include "roomgraph/eval.hpp"
#include "roomgraph/lookup.hpp"
#include "roomgraph/navgraph.hpp"
#include "roomgraph/objects.hpp"
#include "roomgraph/pipeline.hpp"
#include "roomgraph/scenegraph.hpp"
#include "roomgraph/snap.hpp"
#include "roomgraph/synth.hpp"

using namespace roomgraph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failed check; later checks still run so the detail
// line reports the earliest problem.
class Checker {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond && out_.ok) {
      out_.ok = false;
      out_.detail = what;
    }
  }
  void note(const std::string& text) {
    if (out_.ok) out_.detail = text;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

std::string cli_path;

int components8(const BinaryGrid& g) {
  const int w = g.width(), h = g.height();
  std::vector<std::uint8_t> seen(g.cells.size(), 0);
  int count = 0;
  for (std::size_t s = 0; s < g.cells.size(); ++s) {
    if (!g.cells[s] || seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(k % w), y = static_cast<int>(k / w);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int u = x + dx, v = y + dy;
          if (u < 0 || v < 0 || u >= w || v >= h) continue;
          const std::size_t nk = static_cast<std::size_t>(v) * w + u;
          if (g.cells[nk] && !seen[nk]) {
            seen[nk] = 1;
            stack.push_back(nk);
          }
        }
    }
  }
  return count;
}
fs::path work;

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// Runs the CLI inside `work` with stdout captured to `out_file`.
int run_cli(const std::string& args, const fs::path& out_file, bool single_thread = false) {
  const std::string cmd = "cd " + quote(work.string()) + " && " + (single_thread ? "OMP_NUM_THREADS=1 " : "") +
                          quote(cli_path) + " " + args + " > " + quote(out_file.string()) + " 2> " + quote(out_file.string() + ".err");
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string errors(const fs::path& out_file) { return slurp(out_file.string() + ".err"); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome layer_vote_fusion() {
  Checker c;
  const LayerSelectParams p;  // delta_b = 1/15, delta_t = 1/5
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, 100000)(rng);
    std::size_t sk;
    switch (trial % 4) {
      case 0: sk = s / 15 + trial % 3; break;
      case 1: sk = s / 5 + trial % 3; break;
      default: sk = std::uniform_int_distribution<std::size_t>(0, s)(rng);
    }
    sk = std::min(sk, s);
    const bool direct = s < 15 * sk && 5 * sk < s;
    c.expect(keep_layer(sk, s, p) == direct, "layer selection differs at S=" + std::to_string(s) + " S_k=" + std::to_string(sk));
  }
  const GridSpec one{0, 0, 1, 1, 1};
  for (int m = 1; m <= 8; ++m) {
    for (int v = 0; v <= m; ++v) {
      std::vector<BinaryGrid> layers;
      for (int k = 0; k < m; ++k) layers.emplace_back(one, k < v ? 1 : 0);
      const bool border = merge_border(one, layers, 0.75).border.cells[0] != 0;
      c.expect(border == (4 * v >= 3 * m), "vote threshold wrong at M=" + std::to_string(m) + " votes=" + std::to_string(v));
    }
  }
  const GridSpec row{0, 0, 1, 200, 1};
  ValueGrid den(row);
  BinaryGrid border(row);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < den.cells.size(); ++k) {
    den.cells[k] = k == 0 ? 0.0 : u(rng);
    border.cells[k] = k == 0 ? 1 : static_cast<std::uint8_t>(k % 2);
  }
  const auto comb = combine(den, border, 0.9);
  c.expect(std::abs(comb.cells[0] - 0.1) <= 1e-12, "den=0, border=1 gives " + fmt(comb.cells[0]));
  for (std::size_t k = 0; k < den.cells.size(); ++k) {
    const double want = 0.9 * den.cells[k] + 0.1 * border.cells[k];
    c.expect(std::abs(comb.cells[k] - want) <= 1e-12, "fusion is not affine at cell " + std::to_string(k));
  }
  c.note("1000 layer pairs, M=1..8 votes, fusion affine");
  return c.result();
}

Outcome room_segmentation() {
  Checker c;
  SynthParams sp;
  sp.door_width = 0.9;
  sp.cell_size = 0.05;
  const auto scene = synth_apartment(sp);
  PipelineConfig config;
  config.cell_size = 0.05;
  const auto maps = run_density(scene.cloud, scene.spec, config);
  const auto seg = run_segmentation(maps, config);
  std::vector<ScoredMask> preds;
  for (const auto& m : seg.masks) preds.push_back({m.room_id, m.cells, m.confidence});
  const auto metrics = segmentation_metrics(preds, scene.gt_masks);
  c.expect(metrics.miou >= 0.90, "mIoU " + fmt(metrics.miou) + " < 0.90");
  c.expect(metrics.ap50 == 1.0, "AP50 " + fmt(metrics.ap50) + " != 1");
  c.note(std::to_string(seg.masks.size()) + " rooms, mIoU " + fmt(metrics.miou) + ", AP50 " + fmt(metrics.ap50));
  return c.result();
}

Outcome camera_ellipse() {
  Checker c;
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> pos(-5, 5), ext(0.5, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double x0 = pos(rng), y0 = pos(rng), l = ext(rng), w = ext(rng);
    const Aabb3 box{{x0, y0, 0}, {x0 + l, y0 + w, 2.7}};
    SnapParams p;
    p.num_views = 1 + trial % 16;
    for (const auto& pose : camera_ring(box, p)) {
      const double u = (pose.position.x - (x0 + l / 2)) / (l / 2), v = (pose.position.y - (y0 + w / 2)) / (w / 2);
      worst = std::max(worst, std::abs(u * u + v * v - 1.0));
    }
  }
  c.expect(worst < 1e-9, "ellipse residual " + fmt(worst));
  const Aabb3 box{{1, 2, 0}, {7, 6, 3}};
  SnapParams p;
  p.num_views = 4;
  const auto poses = camera_ring(box, p);
  const double xc = 4, yc = 4, l = 6, w = 4;
  const double want[4][2] = {{xc + l / 2, yc}, {xc, yc + w / 2}, {xc - l / 2, yc}, {xc, yc - w / 2}};
  for (int k = 0; k < 4; ++k) {
    c.expect(std::abs(poses[k].position.x - want[k][0]) < 1e-9 && std::abs(poses[k].position.y - want[k][1]) < 1e-9,
             "4-view pose " + std::to_string(k) + " off the axis extreme");
  }
  c.note("max residual " + fmt(worst) + ", 4-view extremes exact");
  return c.result();
}

Outcome snap_lookup() {
  Checker c;
  PipelineConfig config;
  StubBackend stub;
  plant_fixture_signatures(stub, config);
  const auto types = known_room_types();
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> size(3.0, 5.5);
  struct Room {
    std::string type;
    double w, d;
    std::uint64_t seed;
  };
  std::vector<Room> rooms;
  for (int k = 0; k < 20; ++k) rooms.push_back({types[k % types.size()], size(rng), size(rng), 1000u + k});
  std::vector<std::vector<std::string>> runs(2);
  int correct = 0;
  for (int run = 0; run < 2; ++run) {
    for (const auto& r : rooms) {
      SynthParams sp;
      sp.seed = r.seed;
      const auto scene = synth_single_room(r.type, r.w, r.d, sp);
      const RegionMask mask{0, scene.gt_masks[0], 1.0};
      const auto out = classify_room_views(scene.cloud, scene.spec, mask, config, stub);
      std::string trace = out.result.label;
      for (const auto& v : out.result.per_view_predictions) trace += "," + v;
      runs[run].push_back(trace);
      if (run == 0) {
        correct += out.result.label == r.type;
        c.expect(out.result.label == r.type, r.type + " room classified as " + out.result.label);
      }
    }
  }
  c.expect(runs[0] == runs[1], "labels differ between two runs");
  c.note(std::to_string(correct) + "/20 correct, identical across runs");
  return c.result();
}

Outcome dbscan_oracle() {
  Checker c;
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 500)(rng);
    const double eps = std::uniform_real_distribution<double>(0.02, 0.2)(rng);
    const int min_pts = std::uniform_int_distribution<int>(3, 20)(rng);
    // Mixture of blobs and uniform noise in a unit cube.
    std::vector<Vec3> pts;
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> g(0, 0.04);
    const int blobs = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<Vec3> centers;
    for (int b = 0; b < blobs; ++b) centers.push_back({u(rng), u(rng), u(rng)});
    for (int k = 0; k < n; ++k) {
      if (u(rng) < 0.2) {
        pts.push_back({u(rng), u(rng), u(rng)});
      } else {
        const Vec3& ctr = centers[static_cast<std::size_t>(k % blobs)];
        pts.push_back({ctr.x + g(rng), ctr.y + g(rng), ctr.z + g(rng)});
      }
    }
    const auto got = dbscan(pts, eps, min_pts);
    const auto want = oracle::dbscan(pts, eps, min_pts);
    c.expect(got.core == want.core, "core flags differ in trial " + std::to_string(trial));
    c.expect(oracle::same_partition(got.labels, want.labels), "clusters differ in trial " + std::to_string(trial));
  }
  c.note("200 clouds identical to the O(n^2) oracle");
  return c.result();
}

Outcome object_pipeline() {
  Checker c;
  PipelineConfig config;
  StubBackend stub;
  plant_fixture_signatures(stub, config);
  const auto labels = object_archetypes();
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  int planted = 0, recovered = 0, classified = 0, matched = 0;
  double worst_centroid = 0, worst_norm = 0;
  for (int scene = 0; scene < 10; ++scene) {
    PointCloud cloud;
    for (double x = -2.0; x <= 2.0 + 1e-9; x += 0.025)
      for (double y = -2.0; y <= 2.0 + 1e-9; y += 0.025) cloud.add({x, y, 0.0}, {128, 128, 128});
    std::vector<std::pair<std::string, Box3>> truth;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const std::string& label = labels[(k + scene) % labels.size()];
      const double x = -1.3 + 1.3 * k + jitter(rng), y = jitter(rng) * 2;
      const auto pts = archetype_points(label, x, y, 0.025);
      for (std::size_t q = 0; q < pts.size(); ++q) cloud.add(pts.points[q], pts.colors[q]);
      truth.push_back({label, archetype_box(label, x, y)});
    }
    const auto dets = detect_boxes(cloud, config.box_params());
    for (std::size_t d = 0; d < dets.size(); ++d) {
      const auto obj = normalize_points(filter_object_points(cloud, dets[d].box, config.dbscan_params(), derive_seed(7, "accept", d)).points);
      Vec3 ctr;
      double mx = 0;
      for (const auto& p : obj.points) {
        ctr += p;
        mx = std::max(mx, p.norm());
      }
      ctr = ctr * (1.0 / static_cast<double>(obj.points.size()));
      c.expect(obj.points.size() == static_cast<std::size_t>(config.n), "filtered set has " + std::to_string(obj.points.size()) + " points");
      worst_centroid = std::max(worst_centroid, ctr.norm());
      worst_norm = std::max(worst_norm, std::abs(mx - 1.0));
    }
    for (const auto& [label, box] : truth) {
      ++planted;
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double iou = box_iou(dets[d].box, box);
        if (iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(d);
        }
      }
      if (best < 0 || best_iou < 0.5) continue;
      ++recovered;
      const auto raw = filter_object_points(cloud, dets[static_cast<std::size_t>(best)].box, config.dbscan_params(),
                                            derive_seed(7, "accept", static_cast<std::uint64_t>(best)));
      const auto obj = normalize_points(raw.points);
      ++matched;
      const auto got = classify_object(obj, config.object_categories, stub);
      classified += got.label == label;
      c.expect(got.label == label, label + " classified as " + got.label);
    }
  }
  c.expect(recovered * 10 >= planted * 9, "recall " + std::to_string(recovered) + "/" + std::to_string(planted));
  c.expect(worst_centroid <= 1e-9, "centroid off by " + fmt(worst_centroid));
  c.expect(worst_norm <= 1e-9, "max norm off by " + fmt(worst_norm));
  c.note("recall " + std::to_string(recovered) + "/" + std::to_string(planted) + ", classification " + std::to_string(classified) +
         "/" + std::to_string(matched));
  return c.result();
}

Outcome metric_oracles() {
  Checker c;
  std::mt19937_64 rng(107);
  auto cells = [](int a, int b) {
    std::vector<std::size_t> v;
    for (int k = a; k < b; ++k) v.push_back(static_cast<std::size_t>(k));
    return v;
  };
  auto cube = [](double x, double y, double z, double s) { return Box3{{x, y, z}, {s, s, s}, 0.0}; };
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> count(0, 6), lo(0, 80), len(1, 30);
    std::uniform_real_distribution<double> u(0, 1), pos(0, 2), size(0.3, 1.2);
    const int np = count(rng), ng = count(rng);
    std::vector<ScoredMask> preds;
    std::vector<std::vector<std::size_t>> gt;
    for (int p = 0; p < np; ++p) {
      const int a = lo(rng);
      preds.push_back({p, cells(a, a + len(rng)), std::round(u(rng) * 4) / 4});
    }
    for (int g = 0; g < ng; ++g) {
      const int a = lo(rng);
      gt.push_back(cells(a, a + len(rng)));
    }
    std::vector<double> iou(static_cast<std::size_t>(np * ng)), conf(static_cast<std::size_t>(np));
    for (int p = 0; p < np; ++p) {
      conf[p] = preds[p].confidence;
      for (int g = 0; g < ng; ++g) iou[p * ng + g] = mask_iou(preds[p].cells, gt[g]);
    }
    const auto m = segmentation_metrics(preds, gt, 0.5);
    c.expect(std::abs(m.miou - oracle::brute_mean_iou(iou, np, ng)) <= 1e-9, "mIoU differs in trial " + std::to_string(trial));
    c.expect(std::abs(m.ap50 - oracle::brute_ap(iou, np, ng, conf, 0.5)) <= 1e-9, "mask AP differs in trial " + std::to_string(trial));

    std::map<std::string, std::vector<ScoredBox>> bp;
    std::map<std::string, std::vector<Box3>> bg;
    const int nbp = count(rng), nbg = 1 + count(rng) % 6;
    for (int p = 0; p < nbp; ++p) bp["a"].push_back({cube(pos(rng), pos(rng), pos(rng), size(rng)), u(rng)});
    for (int g = 0; g < nbg; ++g) bg["a"].push_back(cube(pos(rng), pos(rng), pos(rng), size(rng)));
    std::vector<double> biou(static_cast<std::size_t>(nbp * nbg)), bconf(static_cast<std::size_t>(nbp));
    for (int p = 0; p < nbp; ++p) {
      bconf[p] = bp["a"][p].score;
      for (int g = 0; g < nbg; ++g) biou[p * nbg + g] = box_iou(bp["a"][p].box, bg["a"][g]);
    }
    for (double thr : {0.25, 0.5}) {
      const double got = detection_ap(bp, bg, thr).per_class.at("a");
      c.expect(std::abs(got - oracle::brute_ap(biou, nbp, nbg, bconf, thr)) <= 1e-9, "box AP differs in trial " + std::to_string(trial));
    }
  }
  const double third = box_iou(cube(0, 0, 0, 1), cube(0.5, 0, 0, 1));
  c.expect(std::abs(third - 1.0 / 3.0) <= 1e-12, "half-overlap IoU " + fmt(third));
  const std::vector<std::string> truth{"a", "a", "b", "b", "c", "c"};
  const std::vector<LabelPrediction> pred{{"a", .9}, {"a", .8}, {"a", .7}, {"b", .6}, {"c", .5}, {"c", .4}};
  const auto r = classification_report(pred, truth);
  c.expect(r.confusion.at("a").at("a") == 2 && r.confusion.at("b").at("a") == 1 && r.confusion.at("b").at("b") == 1 &&
               r.confusion.at("c").at("c") == 2,
           "confusion matrix differs from [[2,0,0],[1,1,0],[0,0,2]]");
  c.expect(std::abs(r.per_class.at("a").f1 - 0.8) <= 1e-12 && std::abs(r.per_class.at("b").f1 - 2.0 / 3.0) <= 1e-12,
           "per-class F1 differs from hand values");
  c.expect(std::abs(r.f1 - (0.8 + 2.0 / 3.0 + 1.0) / 3.0) <= 1e-12, "mean F1 differs from hand value");
  c.note("100 random instances match brute force; cube IoU 1/3; confusion matrix exact");
  return c.result();
}

Outcome navigation() {
  Checker c;
  SynthParams sp;
  sp.objects = false;
  const auto corridor = synth_corridor(10.0, 2.0, sp);
  NavParams p;
  NavMaps maps;
  build_navgraph(build_free_space_map(corridor.cloud, p, corridor.spec), p, &maps);
  std::size_t total = 0, near = 0;
  for (std::size_t k = 0; k < maps.skeleton.cells.size(); ++k) {
    if (!maps.skeleton.cells[k]) continue;
    ++total;
    near += std::abs(corridor.spec.center_y(corridor.spec.cell(k).j) - 1.0) <= corridor.spec.cell_size + 1e-9;
  }
  const double share = total ? static_cast<double>(near) / static_cast<double>(total) : 0.0;
  c.expect(share >= 0.95, "only " + fmt(100 * share) + "% of the corridor skeleton is on the centerline");

  std::mt19937_64 rng(108);
  int maps_done = 0, pairs = 0;
  double worst = 0;
  while (maps_done < 50) {
    const auto free = oracle::random_free_map(rng, 80, 60, 0.1);
    const auto eroded = erode_free_space(free, p.robot_radius);
    // Connectivity for the robot: eroded space in one 8-connected piece.
    if (components8(eroded) != 1) continue;
    ++maps_done;
    NavMaps m;
    const auto g = build_navgraph(free, p, &m);
    c.expect(g.component_count() == 1, "graph split into " + std::to_string(g.component_count()) + " parts on map " + std::to_string(maps_done));
    for (std::size_t k = 0; k < free.cells.size(); ++k) {
      c.expect(m.boundary.cells[k] == (free.cells[k] && !m.eroded.cells[k] ? 1 : 0), "boundary != free - eroded");
    }
    std::vector<Cell> open;
    for (std::size_t k = 0; k < m.eroded.cells.size(); ++k)
      if (m.eroded.cells[k]) open.push_back(m.eroded.spec.cell(k));
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    for (int q = 0; q < 5; ++q) {
      const Cell a = open[pick(rng)], b = open[pick(rng)];
      const double geo = oracle::grid_geodesic(m.eroded, a, b);
      if (geo == 0) continue;
      const auto path = plan_path(g, {free.spec.center_x(a.i), free.spec.center_y(a.j)},
                                  {free.spec.center_x(b.i), free.spec.center_y(b.j)}, m.eroded);
      ++pairs;
      worst = std::max(worst, path.length / geo);
      c.expect(path.length <= 1.2 * geo, "path " + fmt(path.length) + " > 1.2 x geodesic " + fmt(geo));
    }
  }
  c.note("centerline share " + fmt(100 * share) + "%, 50 maps connected, worst path/geodesic " + fmt(worst) + " over " +
         std::to_string(pairs) + " pairs");
  return c.result();
}

Outcome end_to_end() {
  Checker c;
  const fs::path log = work / "e2e.log";
  c.expect(run_cli("synth --layout apartment --out apt", log) == 0, "synth apartment failed: " + errors(log));
  double slowest = 0;
  for (const char* run : {"run1", "run2"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = run_cli(std::string("build --config apt/config.json --output apt/") + run, work / (std::string(run) + ".log"), true);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    c.expect(rc == 0, std::string("build ") + run + " failed: " + errors(work / (std::string(run) + ".log")));
    c.expect(secs < 60.0, std::string("build ") + run + " took " + fmt(secs) + " s");
  }
  const std::string a = slurp(work / "apt/run1/scene_graph.json"), b = slurp(work / "apt/run2/scene_graph.json");
  c.expect(!a.empty() && a == b, "scene graph JSON differs between runs");

  const fs::path qout = work / "query.json";
  c.expect(run_cli("query --graph apt/run1/scene_graph.json --room hallway --object 'water station'", qout) == 0,
           "query failed: " + errors(qout));
  try {
    const auto q = nlohmann::json::parse(slurp(qout));
    const auto graph = deserialize(a);
    const auto gt = ground_truth_from_json(nlohmann::json::parse(slurp(work / "apt/gt.json")));
    const int oid = q.at("object_id").get<int>();
    const ObjectNode* obj = nullptr;
    for (const auto& o : graph.objects)
      if (o.object_id == oid) obj = &o;
    c.expect(obj != nullptr, "query returned no object");
    if (obj != nullptr) {
      c.expect(obj->label == "water station", "query object labelled " + obj->label);
      c.expect(graph.room(obj->room_id)->label == "hallway", "query object is not in the hallway");
      c.expect(q.at("nav_node").get<int>() == obj->nav_anchor, "nav node is not the object's anchor");
      double best = 0;
      for (std::size_t k = 0; k < gt.object_boxes.size(); ++k)
        if (gt.object_labels[k] == "water station") best = std::max(best, box_iou(gt.object_boxes[k], obj->box));
      c.expect(best >= 0.5, "query object does not overlap the planted water station");
    }
  } catch (const std::exception& e) {
    c.expect(false, std::string("query output unreadable: ") + e.what());
  }

  c.expect(run_cli("synth --layout duplicate --out dup", log) == 0, "synth duplicate failed: " + errors(log));
  c.expect(run_cli("build --config dup/config.json", log, true) == 0, "duplicate build failed: " + errors(log));
  const fs::path dout = work / "dup_query.json";
  c.expect(run_cli("query --graph dup/build/scene_graph.json --room bedroom --object table", dout) == 0,
           "duplicate query failed: " + errors(dout));
  try {
    const auto q = nlohmann::json::parse(slurp(dout));
    const auto graph = deserialize(slurp(work / "dup/build/scene_graph.json"));
    int lowest = -1;
    for (const auto& r : graph.rooms)
      if (r.label == "bedroom" && (lowest < 0 || r.room_id < lowest)) lowest = r.room_id;
    c.expect(q.at("room_id").get<int>() == lowest, "duplicate query picked room " + q.at("room_id").dump());
    bool warned = false;
    for (const auto& w : q.at("warnings")) warned = warned || w.get<std::string>().find("ambiguous") != std::string::npos;
    c.expect(warned, "duplicate query carries no ambiguity warning");
  } catch (const std::exception& e) {
    c.expect(false, std::string("duplicate query output unreadable: ") + e.what());
  }
  c.note("byte-identical graphs, slowest single-thread build " + fmt(slowest) + " s, both queries as planted");
  return c.result();
}

Outcome remote_smoke() {
  Checker c;
  testing_support::EmbedServer server;
  const fs::path log = work / "remote.log";
  c.expect(run_cli("synth --layout apartment --out remote", log) == 0, "synth failed: " + errors(log));
  c.expect(run_cli("build --config remote/config.json --backend remote --embed_url " + server.url() + " --num_views 4", log) == 0,
           "remote build failed: " + errors(log));
  try {
    const auto graph = deserialize(slurp(work / "remote/build/scene_graph.json"));
    c.expect(!graph.rooms.empty(), "no rooms");
    for (const auto& r : graph.rooms) c.expect(!r.label.empty(), "room " + std::to_string(r.room_id) + " has no label");
    for (const auto& o : graph.objects) c.expect(!o.label.empty(), "object " + std::to_string(o.object_id) + " has no label");
    c.note(std::to_string(graph.rooms.size()) + " rooms and " + std::to_string(graph.objects.size()) + " objects labelled over " +
           std::to_string(server.requests.load()) + " /embed requests (synthetic sample)");
  } catch (const std::exception& e) {
    c.expect(false, std::string("scene graph unreadable: ") + e.what());
  }
  return c.result();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_acceptance <path-to-roomgraph-cli>\n";
    return 2;
  }
  cli_path = fs::absolute(argv[1]).string();
  work = fs::temp_directory_path() / ("roomgraph_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "layer selection, vote, fusion", 1.0, layer_vote_fusion},
      {2, "room segmentation fixture", 10.0, room_segmentation},
      {3, "camera ellipse", 1.0, camera_ellipse},
      {4, "snap-lookup classification", 30.0, snap_lookup},
      {5, "DBSCAN oracle", 30.0, dbscan_oracle},
      {6, "object pipeline fixture", 20.0, object_pipeline},
      {7, "metric oracles", 10.0, metric_oracles},
      {8, "navigation graph", 30.0, navigation},
      {9, "end-to-end determinism and queries", 180.0, end_to_end},
      {10, "remote /embed smoke", 120.0, remote_smoke},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.ok && secs >= cr.budget) out = {false, "took " + fmt(secs) + " s, budget " + fmt(cr.budget) + " s"};
    failed += out.ok ? 0 : 1;
    std::printf("criterion %2d %-38s %s  %7.2fs  %s\n", cr.id, cr.name, out.ok ? "PASS" : "FAIL", secs, out.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
