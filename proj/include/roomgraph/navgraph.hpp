#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "roomgraph/geom.hpp"

namespace roomgraph {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

double distance(const Point2& a, const Point2& b);
double polyline_length(const std::vector<Point2>& polyline);

struct NavParams {
  double h_robot = 1.2;            // height of the obstacle band above the floor
  double robot_radius = 0.3;       // erosion radius
  double trim_len = 0.5;           // leaf edges shorter than this are removed
  double d_sep = 0.2;              // minimum nearest-boundary separation of ridge cells
  double floor_clearance = 0.1;    // band starts this far above z_min so the floor itself is not an obstacle
  double min_separation_ratio = 0.8;  // ridge test also needs sep >= ratio * (d_p + d_q)
  void validate() const;
};

struct NavEdge {
  int a = 0;
  int b = 0;
  std::vector<Point2> polyline;  // starts at node a, ends at node b
  double length = 0.0;
};

struct NavGraph {
  std::vector<Point2> nodes;
  std::vector<NavEdge> edges;

  std::size_t degree(int node) const;
  /// Throws Errc::schema on dangling node ids or lengths that disagree with
  /// their polylines.
  void validate() const;
  /// Number of connected components (isolated nodes count as components).
  int component_count() const;
};

/// Obstacles are cells holding a point with z in [z_min + floor_clearance,
/// z_min + h_robot]; free space is the largest non-obstacle 4-connected
/// component that does not touch the raster edge (the largest component
/// overall if every one touches it).
BinaryGrid build_free_space_map(const PointCloud& cloud, const NavParams& params, const GridSpec& spec);

/// Intermediate rasters of build_navgraph.
struct NavMaps {
  BinaryGrid free;
  BinaryGrid eroded;
  BinaryGrid boundary;   // free minus eroded
  BinaryGrid ridge;      // generalized Voronoi cells
  BinaryGrid skeleton;   // thinned, one cell wide
  ValueGrid clearance;   // meters to the nearest boundary cell (eroded cells only)
};

/// Eroded free space is thinned in order of increasing clearance, deleting
/// only simple points, with ridge cells kept once they become line ends.
/// The skeleton therefore has the topology of the eroded space and follows
/// the ridge. Junctions and ends become nodes, chains become polyline edges,
/// and leaf edges shorter than trim_len are removed in a single pass.
/// Throws Errc::degenerate when nothing survives erosion.
NavGraph build_navgraph(const BinaryGrid& free, const NavParams& params, NavMaps* maps = nullptr);

/// Erosion of `free` by the robot radius.
BinaryGrid erode_free_space(const BinaryGrid& free, double robot_radius);

struct Route {
  std::vector<int> nodes;
  double length = 0.0;
};

/// Dijkstra over edge lengths; Errc::unreachable when b cannot be reached.
Route shortest_route(const NavGraph& graph, int a, int b);

struct PathResult {
  std::vector<Point2> polyline;
  double length = 0.0;        // of the returned (shortcut) polyline
  double route_length = 0.0;  // attach segments plus graph route, before shortcutting
};

/// Straight line if visible. Otherwise start and goal link to every node
/// and edge vertex they can see (a grid walk to the nearest one if they see
/// none), Dijkstra picks the cheapest route through those links and the
/// graph, and the route is shortcut to the cheapest chain of mutually
/// visible vertices, resampled at cell pitch until it stops shrinking.
/// `passable` is the map the robot center may occupy (the eroded map).
PathResult plan_path(const NavGraph& graph, Point2 start, Point2 goal, const BinaryGrid& passable);

/// Every cell the segment passes through is set; a segment through a cell
/// corner needs both cells beside that corner.
bool line_of_sight(const BinaryGrid& passable, Point2 a, Point2 b);

nlohmann::json to_json(const NavGraph& graph);
NavGraph navgraph_from_json(const nlohmann::json& j);
std::string to_dot(const NavGraph& graph);

}  // namespace roomgraph
