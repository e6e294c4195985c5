#include "roomgraph/navgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "roomgraph/kernels.hpp"

namespace roomgraph {
namespace {

constexpr int kDx8[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy8[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr double kInf = std::numeric_limits<double>::infinity();

using Mask = std::vector<std::uint8_t>;

bool set_at(const GridSpec& spec, const Mask& m, int i, int j) { return spec.contains(i, j) && m[spec.index(i, j)]; }

Point2 center_of(const GridSpec& spec, std::size_t k) {
  const Cell c = spec.cell(k);
  return {spec.center_x(c.i), spec.center_y(c.j)};
}

double cell_distance(const GridSpec& spec, std::size_t a, std::size_t b) {
  const Cell ca = spec.cell(a), cb = spec.cell(b);
  return std::hypot(static_cast<double>(ca.i - cb.i), static_cast<double>(ca.j - cb.j));
}

// Nearest boundary cell for every eroded cell via 8-neighbour label
// propagation ordered by true Euclidean distance to the carried label.
void brushfire(const GridSpec& spec, const Mask& eroded, const Mask& boundary, std::vector<long>& label,
               std::vector<double>& dist) {
  const std::size_t n = spec.cell_count();
  label.assign(n, -1);
  dist.assign(n, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t k = 0; k < n; ++k) {
    if (!boundary[k]) continue;
    label[k] = static_cast<long>(k);
    dist[k] = 0.0;
    queue.push({0.0, k});
  }
  while (!queue.empty()) {
    const auto [d, k] = queue.top();
    queue.pop();
    if (d > dist[k]) continue;
    const Cell c = spec.cell(k);
    for (int t = 0; t < 8; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (!set_at(spec, eroded, ni, nj)) continue;
      const std::size_t m = spec.index(ni, nj);
      const double cand = cell_distance(spec, m, static_cast<std::size_t>(label[k]));
      if (cand < dist[m] - 1e-12 || (std::abs(cand - dist[m]) <= 1e-12 && label[k] < label[m])) {
        dist[m] = cand;
        label[m] = label[k];
        queue.push({cand, m});
      }
    }
  }
}

// Removing p keeps one 8-connected foreground piece and one 4-connected
// background piece around it.
bool is_simple(const GridSpec& spec, const Mask& fg, int i, int j) {
  bool ring[8];
  for (int t = 0; t < 8; ++t) ring[t] = set_at(spec, fg, i + kDx8[t], j + kDy8[t]);
  // Foreground components among the ring under 8-adjacency.
  int fg_parts = 0;
  bool seen[8] = {};
  for (int s = 0; s < 8; ++s) {
    if (!ring[s] || seen[s]) continue;
    ++fg_parts;
    int stack[8], top = 0;
    stack[top++] = s;
    seen[s] = true;
    while (top > 0) {
      const int u = stack[--top];
      for (int v = 0; v < 8; ++v) {
        if (!ring[v] || seen[v]) continue;
        if (std::abs(kDx8[u] - kDx8[v]) <= 1 && std::abs(kDy8[u] - kDy8[v]) <= 1) {
          seen[v] = true;
          stack[top++] = v;
        }
      }
    }
  }
  if (fg_parts != 1) return false;
  // Background components under 4-adjacency that touch p's 4-neighbours.
  int bg_parts = 0;
  bool bseen[8] = {};
  for (int s = 0; s < 8; s += 2) {  // even ring slots are the 4-neighbours
    if (ring[s] || bseen[s]) continue;
    ++bg_parts;
    int stack[8], top = 0;
    stack[top++] = s;
    bseen[s] = true;
    while (top > 0) {
      const int u = stack[--top];
      for (int v = 0; v < 8; ++v) {
        if (ring[v] || bseen[v]) continue;
        if (std::abs(kDx8[u] - kDx8[v]) + std::abs(kDy8[u] - kDy8[v]) == 1) {
          bseen[v] = true;
          stack[top++] = v;
        }
      }
    }
  }
  return bg_parts == 1;
}

int neighbour_count(const GridSpec& spec, const Mask& m, int i, int j) {
  int count = 0;
  for (int t = 0; t < 8; ++t) count += set_at(spec, m, i + kDx8[t], j + kDy8[t]) ? 1 : 0;
  return count;
}

// Clears ridge pieces whose bounding-box diagonal is below min_len. Such
// blobs sit in room corners, and thinning would otherwise grow a spur out to
// each one that survives long enough to become a line end.
void drop_short_ridges(const GridSpec& spec, Mask& ridge, double min_len) {
  std::vector<std::uint8_t> seen(ridge.size(), 0);
  for (std::size_t s = 0; s < ridge.size(); ++s) {
    if (!ridge[s] || seen[s]) continue;
    std::vector<std::size_t> piece{s};
    seen[s] = 1;
    int i0 = spec.cell(s).i, i1 = i0, j0 = spec.cell(s).j, j1 = j0;
    for (std::size_t h = 0; h < piece.size(); ++h) {
      const Cell c = spec.cell(piece[h]);
      i0 = std::min(i0, c.i);
      i1 = std::max(i1, c.i);
      j0 = std::min(j0, c.j);
      j1 = std::max(j1, c.j);
      for (int t = 0; t < 8; ++t) {
        const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
        if (!set_at(spec, ridge, ni, nj)) continue;
        const std::size_t m = spec.index(ni, nj);
        if (!seen[m]) {
          seen[m] = 1;
          piece.push_back(m);
        }
      }
    }
    if (std::hypot(i1 - i0 + 1, j1 - j0 + 1) * spec.cell_size < min_len) {
      for (std::size_t k : piece) ridge[k] = 0;
    }
  }
}

Mask thin(const GridSpec& spec, const Mask& eroded, const Mask& ridge, const std::vector<double>& clearance) {
  Mask skel = eroded;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t k = 0; k < skel.size(); ++k) {
    if (skel[k]) queue.push({clearance[k], k});
  }
  while (!queue.empty()) {
    const std::size_t k = queue.top().second;
    queue.pop();
    if (!skel[k]) continue;
    const Cell c = spec.cell(k);
    if (ridge[k] && neighbour_count(spec, skel, c.i, c.j) <= 1) continue;
    if (!is_simple(spec, skel, c.i, c.j)) continue;
    skel[k] = 0;
    for (int t = 0; t < 8; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (set_at(spec, skel, ni, nj)) {
        const std::size_t m = spec.index(ni, nj);
        queue.push({clearance[m], m});
      }
    }
  }
  return skel;
}

struct RawGraph {
  std::vector<Point2> nodes;
  std::vector<NavEdge> edges;
};

void add_edge(RawGraph& g, int a, int b, std::vector<Point2> polyline) {
  NavEdge e;
  e.a = a;
  e.b = b;
  e.length = polyline_length(polyline);
  e.polyline = std::move(polyline);
  g.edges.push_back(std::move(e));
}

// Adds a loop from `node` through `chain` back to `node` as two edges meeting
// at a node placed mid-chain.
void add_loop(RawGraph& g, const GridSpec& spec, int node, const std::vector<std::size_t>& chain) {
  if (chain.size() < 3) return;
  const std::size_t mid = chain.size() / 2;
  const int m = static_cast<int>(g.nodes.size());
  g.nodes.push_back(center_of(spec, chain[mid]));
  std::vector<Point2> first{g.nodes[node]}, second{g.nodes[m]};
  for (std::size_t k = 0; k < mid; ++k) first.push_back(center_of(spec, chain[k]));
  first.push_back(g.nodes[m]);
  for (std::size_t k = mid + 1; k < chain.size(); ++k) second.push_back(center_of(spec, chain[k]));
  second.push_back(g.nodes[node]);
  add_edge(g, node, m, std::move(first));
  add_edge(g, m, node, std::move(second));
}

RawGraph skeleton_graph(const GridSpec& spec, const Mask& skel) {
  const std::size_t n = skel.size();
  std::vector<int> degree(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!skel[k]) continue;
    const Cell c = spec.cell(k);
    degree[k] = neighbour_count(spec, skel, c.i, c.j);
  }
  // Node clusters: 8-connected groups of cells whose degree is not 2.
  std::vector<int> cluster(n, -1);
  RawGraph g;
  for (std::size_t start = 0; start < n; ++start) {
    if (!skel[start] || degree[start] == 2 || cluster[start] >= 0) continue;
    const int id = static_cast<int>(g.nodes.size());
    std::vector<std::size_t> members{start}, stack{start};
    cluster[start] = id;
    while (!stack.empty()) {
      const Cell c = spec.cell(stack.back());
      stack.pop_back();
      for (int t = 0; t < 8; ++t) {
        const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
        if (!set_at(spec, skel, ni, nj)) continue;
        const std::size_t m = spec.index(ni, nj);
        if (degree[m] == 2 || cluster[m] >= 0) continue;
        cluster[m] = id;
        members.push_back(m);
        stack.push_back(m);
      }
    }
    Point2 mean;
    for (std::size_t m : members) {
      const Point2 p = center_of(spec, m);
      mean.x += p.x / static_cast<double>(members.size());
      mean.y += p.y / static_cast<double>(members.size());
    }
    std::sort(members.begin(), members.end());
    std::size_t rep = members.front();
    for (std::size_t m : members) {
      if (distance(center_of(spec, m), mean) < distance(center_of(spec, rep), mean) - 1e-12) rep = m;
    }
    g.nodes.push_back(center_of(spec, rep));
  }

  std::vector<std::uint8_t> visited(n, 0);
  auto next_in_chain = [&](std::size_t cur, std::size_t prev) -> std::size_t {
    const Cell c = spec.cell(cur);
    for (int t = 0; t < 8; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (!set_at(spec, skel, ni, nj)) continue;
      const std::size_t m = spec.index(ni, nj);
      if (m != prev) return m;
    }
    return prev;
  };
  // Chains leaving each cluster, traced once each.
  for (std::size_t k = 0; k < n; ++k) {
    if (cluster[k] < 0) continue;
    const Cell c = spec.cell(k);
    for (int t = 0; t < 8; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (!set_at(spec, skel, ni, nj)) continue;
      const std::size_t first = spec.index(ni, nj);
      if (degree[first] != 2 || visited[first]) continue;
      std::vector<std::size_t> chain;
      std::size_t prev = k, cur = first;
      while (degree[cur] == 2 && !visited[cur]) {
        visited[cur] = 1;
        chain.push_back(cur);
        const std::size_t nxt = next_in_chain(cur, prev);
        prev = cur;
        cur = nxt;
      }
      if (degree[cur] == 2) continue;  // ran into an already traced chain
      const int a = cluster[k], b = cluster[cur];
      if (a == b) {
        add_loop(g, spec, a, chain);
        continue;
      }
      std::vector<Point2> poly{g.nodes[a]};
      for (std::size_t m : chain) poly.push_back(center_of(spec, m));
      poly.push_back(g.nodes[b]);
      add_edge(g, a, b, std::move(poly));
    }
  }
  // Closed loops without any junction.
  for (std::size_t k = 0; k < n; ++k) {
    if (!skel[k] || degree[k] != 2 || visited[k]) continue;
    const int anchor = static_cast<int>(g.nodes.size());
    g.nodes.push_back(center_of(spec, k));
    visited[k] = 1;
    std::vector<std::size_t> chain;
    std::size_t prev = k, cur = next_in_chain(k, spec.cell_count());
    while (cur != k && !visited[cur]) {
      visited[cur] = 1;
      chain.push_back(cur);
      const std::size_t nxt = next_in_chain(cur, prev);
      prev = cur;
      cur = nxt;
    }
    add_loop(g, spec, anchor, chain);
  }
  return g;
}

// Drops short leaf edges once, then splices out nodes left with two edges.
NavGraph trim_and_merge(RawGraph g, double trim_len) {
  const auto degrees = [&]() {
    std::vector<int> d(g.nodes.size(), 0);
    for (const auto& e : g.edges) {
      ++d[e.a];
      ++d[e.b];
    }
    return d;
  };
  {
    const auto d = degrees();
    std::vector<NavEdge> kept;
    std::vector<std::uint8_t> drop_node(g.nodes.size(), 0);
    for (auto& e : g.edges) {
      const bool leaf_a = d[e.a] == 1, leaf_b = d[e.b] == 1;
      if (e.length < trim_len && (leaf_a != leaf_b)) {
        drop_node[leaf_a ? e.a : e.b] = 1;
        continue;
      }
      kept.push_back(std::move(e));
    }
    g.edges = std::move(kept);
    std::vector<int> remap(g.nodes.size(), -1);
    std::vector<Point2> nodes;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      if (drop_node[k]) continue;
      remap[k] = static_cast<int>(nodes.size());
      nodes.push_back(g.nodes[k]);
    }
    g.nodes = std::move(nodes);
    for (auto& e : g.edges) {
      e.a = remap[e.a];
      e.b = remap[e.b];
    }
  }
  // Splice degree-2 nodes whose two edges lead to different places.
  std::vector<std::uint8_t> removed(g.nodes.size(), 0);
  std::vector<std::uint8_t> dead(g.edges.size(), 0);
  for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
    std::vector<int> incident;
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
      if (!dead[e] && (g.edges[e].a == v || g.edges[e].b == v)) incident.push_back(e);
    }
    if (incident.size() != 2) continue;
    NavEdge& e1 = g.edges[incident[0]];
    NavEdge& e2 = g.edges[incident[1]];
    const int u = e1.a == v ? e1.b : e1.a;
    const int w = e2.a == v ? e2.b : e2.a;
    if (u == v || w == v || u == w) continue;
    std::vector<Point2> p1 = e1.polyline, p2 = e2.polyline;
    if (e1.b != v) std::reverse(p1.begin(), p1.end());  // now ends at v
    if (e2.a != v) std::reverse(p2.begin(), p2.end());  // now starts at v
    p1.insert(p1.end(), p2.begin() + 1, p2.end());
    e1.a = u;
    e1.b = w;
    e1.polyline = std::move(p1);
    e1.length = polyline_length(e1.polyline);
    dead[incident[1]] = 1;
    removed[v] = 1;
  }
  NavGraph out;
  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    if (removed[k]) continue;
    remap[k] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[k]);
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (dead[e]) continue;
    NavEdge edge = std::move(g.edges[e]);
    edge.a = remap[edge.a];
    edge.b = remap[edge.b];
    out.edges.push_back(std::move(edge));
  }
  return out;
}

Mask largest_component(const GridSpec& spec, const Mask& open, bool prefer_enclosed) {
  const std::size_t n = open.size();
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::uint8_t> touches;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (!open[s] || comp[s] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    touches.push_back(0);
    comp[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const Cell c = spec.cell(stack.back());
      stack.pop_back();
      ++sizes[id];
      if (c.i == 0 || c.j == 0 || c.i == spec.width - 1 || c.j == spec.height - 1) touches[id] = 1;
      for (int t = 0; t < 8; t += 2) {
        const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
        if (!set_at(spec, open, ni, nj)) continue;
        const std::size_t m = spec.index(ni, nj);
        if (comp[m] >= 0) continue;
        comp[m] = id;
        stack.push_back(m);
      }
    }
  }
  int best = -1;
  for (int pass = prefer_enclosed ? 0 : 1; pass < 2 && best < 0; ++pass) {
    for (int id = 0; id < static_cast<int>(sizes.size()); ++id) {
      if (pass == 0 && touches[id]) continue;
      if (best < 0 || sizes[id] > sizes[best]) best = id;
    }
  }
  Mask out(n, 0);
  for (std::size_t k = 0; k < n; ++k) out[k] = best >= 0 && comp[k] == best ? 1 : 0;
  return out;
}

}  // namespace

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double polyline_length(const std::vector<Point2>& polyline) {
  double s = 0.0;
  for (std::size_t k = 1; k < polyline.size(); ++k) s += distance(polyline[k - 1], polyline[k]);
  return s;
}

void NavParams::validate() const {
  if (!(h_robot > 0.0)) throw Error(Errc::invalid_argument, "h_robot must be positive");
  if (!(robot_radius > 0.0)) throw Error(Errc::invalid_argument, "robot_radius must be positive");
  if (!(trim_len > 0.0)) throw Error(Errc::invalid_argument, "trim_len must be positive");
  if (!(d_sep > 0.0)) throw Error(Errc::invalid_argument, "d_sep must be positive");
  if (!(floor_clearance >= 0.0 && floor_clearance < h_robot)) throw Error(Errc::invalid_argument, "floor_clearance must lie in [0, h_robot)");
  if (!(min_separation_ratio >= 0.0)) throw Error(Errc::invalid_argument, "min_separation_ratio must be non-negative");
}

std::size_t NavGraph::degree(int node) const {
  std::size_t d = 0;
  for (const auto& e : edges) d += (e.a == node) + (e.b == node);
  return d;
}

void NavGraph::validate() const {
  const int n = static_cast<int>(nodes.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const NavEdge& e = edges[k];
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) throw Error(Errc::schema, "edge " + std::to_string(k) + " references a missing node");
    if (e.polyline.size() < 2) throw Error(Errc::schema, "edge " + std::to_string(k) + " has fewer than two polyline points");
    if (std::abs(polyline_length(e.polyline) - e.length) > 1e-6) {
      throw Error(Errc::schema, "edge " + std::to_string(k) + " length disagrees with its polyline");
    }
  }
}

int NavGraph::component_count() const {
  std::vector<int> parent(nodes.size());
  for (std::size_t k = 0; k < parent.size(); ++k) parent[k] = static_cast<int>(k);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& e : edges) parent[find(e.a)] = find(e.b);
  int count = 0;
  for (std::size_t k = 0; k < parent.size(); ++k) count += find(static_cast<int>(k)) == static_cast<int>(k);
  return count;
}

BinaryGrid build_free_space_map(const PointCloud& cloud, const NavParams& params, const GridSpec& spec) {
  params.validate();
  spec.validate();
  if (cloud.empty()) throw Error(Errc::invalid_argument, "cannot build a free-space map from an empty cloud");
  double z_min = kInf;
  for (const Vec3& p : cloud.points) z_min = std::min(z_min, p.z);
  const double lo = z_min + params.floor_clearance, hi = z_min + params.h_robot;
  Mask open(spec.cell_count(), 1);
  for (const Vec3& p : cloud.points) {
    if (p.z < lo || p.z > hi) continue;
    const auto c = spec.cell_of(p.x, p.y);
    if (c) open[spec.index(c->i, c->j)] = 0;
  }
  BinaryGrid free(spec);
  free.cells = largest_component(spec, open, true);
  return free;
}

BinaryGrid erode_free_space(const BinaryGrid& free, double robot_radius) {
  BinaryGrid out(free.spec);
  out.cells = kernels::erode_disk(free.cells, free.spec.width, free.spec.height, robot_radius / free.spec.cell_size);
  return out;
}

NavGraph build_navgraph(const BinaryGrid& free, const NavParams& params, NavMaps* maps) {
  params.validate();
  const GridSpec& spec = free.spec;
  spec.validate();
  const BinaryGrid eroded = erode_free_space(free, params.robot_radius);
  const std::size_t n = spec.cell_count();
  BinaryGrid boundary(spec);
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    boundary.cells[k] = free.cells[k] && !eroded.cells[k] ? 1 : 0;
    any = any || eroded.cells[k];
  }
  if (!any) throw Error(Errc::degenerate, "no free space survives erosion by the robot radius");

  std::vector<long> label;
  std::vector<double> dist;
  brushfire(spec, eroded.cells, boundary.cells, label, dist);
  // Eroded cells cut off from every boundary cell (only possible when the
  // free map has no obstacles at all) sit at the far end of the order.
  for (std::size_t k = 0; k < n; ++k) {
    if (eroded.cells[k] && label[k] < 0) dist[k] = 1e9;
  }

  BinaryGrid ridge(spec);
  for (std::size_t k = 0; k < n; ++k) {
    if (!eroded.cells[k] || label[k] < 0) continue;
    const Cell c = spec.cell(k);
    for (int t = 0; t < 8 && !ridge.cells[k]; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (!set_at(spec, eroded.cells, ni, nj)) continue;
      const std::size_t m = spec.index(ni, nj);
      if (label[m] < 0) continue;
      const Cell fk = spec.cell(static_cast<std::size_t>(label[k])), fm = spec.cell(static_cast<std::size_t>(label[m]));
      const double sep = std::hypot(fk.i - fm.i, fk.j - fm.j);
      // Feature distances from the pair's midpoint, so the angle test does not
      // favour cells right next to a corner.
      const double mx = 0.5 * (c.i + ni), my = 0.5 * (c.j + nj);
      const double reach = std::hypot(fk.i - mx, fk.j - my) + std::hypot(fm.i - mx, fm.j - my);
      if (sep * spec.cell_size >= params.d_sep && sep >= params.min_separation_ratio * reach) {
        ridge.cells[k] = 1;
      }
    }
  }

  drop_short_ridges(spec, ridge.cells, params.trim_len);

  BinaryGrid skeleton(spec);
  skeleton.cells = thin(spec, eroded.cells, ridge.cells, dist);
  NavGraph graph = trim_and_merge(skeleton_graph(spec, skeleton.cells), params.trim_len);

  if (maps != nullptr) {
    maps->free = free;
    maps->eroded = eroded;
    maps->boundary = boundary;
    maps->ridge = ridge;
    maps->skeleton = skeleton;
    maps->clearance = ValueGrid(spec);
    for (std::size_t k = 0; k < n; ++k) {
      if (eroded.cells[k] && label[k] >= 0) maps->clearance.cells[k] = dist[k] * spec.cell_size;
    }
  }
  return graph;
}

Route shortest_route(const NavGraph& graph, int a, int b) {
  const int n = static_cast<int>(graph.nodes.size());
  if (a < 0 || a >= n || b < 0 || b >= n) throw Error(Errc::invalid_argument, "route endpoint is not a graph node");
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  for (const auto& e : graph.edges) {
    adj[e.a].push_back({e.b, e.length});
    adj[e.b].push_back({e.a, e.length});
  }
  std::vector<double> dist(static_cast<std::size_t>(n), kInf);
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[a] = 0.0;
  queue.push({0.0, a});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == b) break;
    for (const auto& [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        prev[v] = u;
        queue.push({dist[v], v});
      }
    }
  }
  if (!std::isfinite(dist[b])) throw Error(Errc::unreachable, "no route between nodes " + std::to_string(a) + " and " + std::to_string(b));
  Route r;
  r.length = dist[b];
  for (int v = b; v >= 0; v = prev[v]) r.nodes.push_back(v);
  std::reverse(r.nodes.begin(), r.nodes.end());
  return r;
}

bool line_of_sight(const BinaryGrid& passable, Point2 a, Point2 b) {
  const GridSpec& spec = passable.spec;
  auto open = [&](int i, int j) { return spec.contains(i, j) && passable.at(i, j) != 0; };
  Cell c = spec.locate(a.x, a.y);
  const Cell end = spec.locate(b.x, b.y);
  if (!open(c.i, c.j) || !open(end.i, end.j)) return false;
  // Grid traversal in cell units; passing through a cell corner requires
  // both side cells, which keeps the test monotone under subdivision.
  const double ax = (a.x - spec.origin_x) / spec.cell_size, ay = (a.y - spec.origin_y) / spec.cell_size;
  const double dx = (b.x - a.x) / spec.cell_size, dy = (b.y - a.y) / spec.cell_size;
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  double tx = dx == 0 ? kInf : ((dx > 0 ? c.i + 1 : c.i) - ax) / dx;
  double ty = dy == 0 ? kInf : ((dy > 0 ? c.j + 1 : c.j) - ay) / dy;
  const double step_x = dx == 0 ? kInf : 1.0 / std::abs(dx), step_y = dy == 0 ? kInf : 1.0 / std::abs(dy);
  constexpr double kTie = 1e-9;
  while (std::min(tx, ty) < 1.0 - kTie) {
    if (std::abs(tx - ty) <= kTie) {
      if (!open(c.i + sx, c.j) || !open(c.i, c.j + sy)) return false;
      c.i += sx;
      c.j += sy;
      tx += step_x;
      ty += step_y;
    } else if (tx < ty) {
      c.i += sx;
      tx += step_x;
    } else {
      c.j += sy;
      ty += step_y;
    }
    if (!open(c.i, c.j)) return false;
  }
  return true;
}

namespace {

// A place where the start or goal can join the graph: a node or an interior
// polyline vertex of an edge.
struct Attach {
  Point2 at;
  int node = -1;
  int edge = -1;
  std::size_t vertex = 0;
};

std::vector<Attach> attach_points(const NavGraph& graph) {
  std::vector<Attach> out;
  for (int v = 0; v < static_cast<int>(graph.nodes.size()); ++v) out.push_back({graph.nodes[v], v, -1, 0});
  for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
    const auto& poly = graph.edges[e].polyline;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) out.push_back({poly[k], -1, e, k});
  }
  return out;
}

// Leg from p to the graph: the straight segment to the nearest visible
// attachment, else a grid walk to the nearest cell holding one.
std::pair<std::vector<Point2>, std::size_t> connect(const std::vector<Attach>& attach, Point2 p,
                                                    const BinaryGrid& passable) {
  std::vector<std::size_t> order(attach.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return distance(attach[x].at, p) < distance(attach[y].at, p); });
  for (std::size_t k : order) {
    if (line_of_sight(passable, p, attach[k].at)) return {{p, attach[k].at}, k};
  }
  const GridSpec& spec = passable.spec;
  std::map<std::size_t, std::size_t> holder;
  for (std::size_t k = attach.size(); k-- > 0;) {
    if (const auto c = spec.cell_of(attach[k].at.x, attach[k].at.y)) holder[spec.index(c->i, c->j)] = k;
  }
  const auto c0 = spec.cell_of(p.x, p.y);
  std::vector<double> dist(spec.cell_count(), kInf);
  std::vector<long> prev(spec.cell_count(), -1);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const std::size_t s = spec.index(c0->i, c0->j);
  dist[s] = 0.0;
  queue.push({0.0, s});
  while (!queue.empty()) {
    const auto [d, k] = queue.top();
    queue.pop();
    if (d > dist[k]) continue;
    if (auto it = holder.find(k); it != holder.end()) {
      std::vector<Point2> leg;
      for (long v = static_cast<long>(k); v >= 0; v = prev[v]) leg.push_back(center_of(spec, static_cast<std::size_t>(v)));
      std::reverse(leg.begin(), leg.end());
      leg.front() = p;
      leg.push_back(attach[it->second].at);
      return {leg, it->second};
    }
    const Cell c = spec.cell(k);
    for (int t = 0; t < 8; ++t) {
      const int ni = c.i + kDx8[t], nj = c.j + kDy8[t];
      if (!set_at(spec, passable.cells, ni, nj)) continue;
      const std::size_t m = spec.index(ni, nj);
      const double nd = d + ((t & 1) ? std::sqrt(2.0) : 1.0);
      if (nd < dist[m]) {
        dist[m] = nd;
        prev[m] = static_cast<long>(k);
        queue.push({nd, m});
      }
    }
  }
  throw Error(Errc::unreachable, "position cannot reach the navigation graph");
}


// Cheapest chain of mutually visible vertices of `path`, endpoints kept.
// Consecutive vertices are always accepted so a chain exists.
std::vector<Point2> shortcut(const std::vector<Point2>& path, const BinaryGrid& passable) {
  const std::size_t n = path.size();
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> from(n, 0);
  best[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double c = best[i] + distance(path[i], path[j]);
      if (c < best[j] && (i + 1 == j || line_of_sight(passable, path[i], path[j]))) {
        best[j] = c;
        from[j] = i;
      }
    }
  }
  std::vector<Point2> out;
  for (std::size_t j = n - 1;; j = from[j]) {
    out.push_back(path[j]);
    if (j == 0) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Inserts evenly spaced samples so no segment is longer than `step`.
std::vector<Point2> densify(const std::vector<Point2>& path, double step) {
  std::vector<Point2> out{path.front()};
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Point2 a = path[k - 1], b = path[k];
    const int parts = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
    for (int t = 1; t <= parts; ++t) {
      const double u = static_cast<double>(t) / parts;
      out.push_back(t == parts ? b : Point2{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace

PathResult plan_path(const NavGraph& graph, Point2 start, Point2 goal, const BinaryGrid& passable) {
  const GridSpec& spec = passable.spec;
  for (const Point2& p : {start, goal}) {
    const auto c = spec.cell_of(p.x, p.y);
    if (!c || !passable.at(c->i, c->j)) {
      std::ostringstream msg;
      msg << "position (" << p.x << ", " << p.y << ") is not in free space";
      throw Error(Errc::invalid_argument, msg.str());
    }
  }
  PathResult out;
  if (start == goal) {
    out.polyline = {start};
    return out;
  }
  if (line_of_sight(passable, start, goal)) {
    out.polyline = {start, goal};
    out.length = out.route_length = distance(start, goal);
    return out;
  }
  if (graph.nodes.empty()) throw Error(Errc::unreachable, "navigation graph is empty");

  // Vertex graph: every node and interior polyline vertex, joined along the
  // edges, plus start and goal linked to each attachment they can see.
  const auto attach = attach_points(graph);
  const std::size_t na = attach.size(), vs = na, vg = na + 1;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(na + 2);
  auto link = [&](std::size_t u, std::size_t v, double w) {
    adj[u].push_back({v, w});
    adj[v].push_back({u, w});
  };
  std::vector<std::size_t> interior_of_edge(graph.edges.size(), na);
  for (std::size_t k = graph.nodes.size(); k < na; ++k) {
    if (interior_of_edge[attach[k].edge] == na) interior_of_edge[attach[k].edge] = k;
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const NavEdge& edge = graph.edges[e];
    const std::size_t first = interior_of_edge[e];
    const std::size_t interior = edge.polyline.size() - 2;
    std::size_t prev = static_cast<std::size_t>(edge.a);
    for (std::size_t t = 0; t < interior; ++t) {
      link(prev, first + t, distance(attach[prev].at, attach[first + t].at));
      prev = first + t;
    }
    link(prev, static_cast<std::size_t>(edge.b), distance(attach[prev].at, attach[static_cast<std::size_t>(edge.b)].at));
  }
  std::map<std::size_t, std::vector<Point2>> legs;  // fallback grid walks, keyed by endpoint vertex
  for (const auto& [v, p] : {std::pair{vs, start}, std::pair{vg, goal}}) {
    bool any = false;
    for (std::size_t k = 0; k < na; ++k) {
      if (line_of_sight(passable, p, attach[k].at)) {
        link(v, k, distance(p, attach[k].at));
        any = true;
      }
    }
    if (!any) {
      auto [leg, k] = connect(attach, p, passable);
      link(v, k, polyline_length(leg));
      legs[v] = std::move(leg);
    }
  }

  std::vector<double> dist(na + 2, kInf);
  std::vector<std::size_t> prev(na + 2, na + 2);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[vs] = 0.0;
  queue.push({0.0, vs});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == vg) break;
    for (const auto& [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        prev[v] = u;
        queue.push({dist[v], v});
      }
    }
  }
  if (!std::isfinite(dist[vg])) throw Error(Errc::unreachable, "start and goal lie on disconnected parts of the graph");
  std::vector<std::size_t> chain;
  for (std::size_t v = vg; v != na + 2; v = prev[v]) chain.push_back(v);
  std::reverse(chain.begin(), chain.end());

  std::vector<Point2> path;
  for (std::size_t t = 0; t < chain.size(); ++t) {
    const std::size_t v = chain[t];
    if (v == vs) {
      if (auto it = legs.find(vs); it != legs.end()) {
        path.insert(path.end(), it->second.begin(), it->second.end() - 1);
      } else {
        path.push_back(start);
      }
    } else if (v == vg) {
      if (auto it = legs.find(vg); it != legs.end()) {
        path.insert(path.end(), it->second.rbegin() + 1, it->second.rend());
      } else {
        path.push_back(goal);
      }
    } else {
      path.push_back(attach[v].at);
    }
  }
  out.route_length = polyline_length(path);

  // Shortcut: cheapest chain of mutually visible vertices, repeated on a
  // resampled copy so corners can slide toward obstacles.
  std::vector<Point2> smooth = shortcut(path, passable);
  double len = polyline_length(smooth);
  for (int round = 0; round < 4; ++round) {
    auto next = shortcut(densify(smooth, spec.cell_size), passable);
    const double next_len = polyline_length(next);
    if (!(next_len < len - 1e-9)) break;
    smooth = std::move(next);
    len = next_len;
  }
  out.polyline = std::move(smooth);
  out.length = polyline_length(out.polyline);
  return out;
}

nlohmann::json to_json(const NavGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
  for (const auto& p : graph.nodes) nodes.push_back({p.x, p.y});
  for (const auto& e : graph.edges) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& p : e.polyline) poly.push_back({p.x, p.y});
    edges.push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}, {"polyline", poly}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

NavGraph navgraph_from_json(const nlohmann::json& j) {
  try {
    NavGraph g;
    for (const auto& p : j.at("nodes")) g.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& e : j.at("edges")) {
      NavEdge edge;
      edge.a = e.at("a").get<int>();
      edge.b = e.at("b").get<int>();
      edge.length = e.at("length").get<double>();
      for (const auto& p : e.at("polyline")) edge.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      g.edges.push_back(std::move(edge));
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::schema, std::string("navigation graph document: ") + e.what());
  }
}

std::string to_dot(const NavGraph& graph) {
  std::ostringstream out;
  out << "graph navgraph {\n  node [shape=point];\n";
  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    out << "  n" << k << " [pos=\"" << graph.nodes[k].x << "," << graph.nodes[k].y << "!\"];\n";
  }
  for (const auto& e : graph.edges) {
    out << "  n" << e.a << " -- n" << e.b << " [label=\"" << e.length << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace roomgraph
