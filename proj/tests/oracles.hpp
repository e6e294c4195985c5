#pragma once

// Slow, obviously-correct reference implementations used as test oracles.
// None of them shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "roomgraph/geom.hpp"
#include "roomgraph/navgraph.hpp"

namespace oracle {

using roomgraph::Vec3;

// Sequential DBSCAN with explicit O(n^2) neighbourhoods. Clusters are
// numbered in the order their first core point is met; a border point
// belongs to the first cluster whose expansion reaches it.
struct Dbscan {
  std::vector<int> labels;  // -1 noise
  std::vector<std::uint8_t> core;
};

inline Dbscan dbscan(const std::vector<Vec3>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y, dz = pts[i].z - pts[j].z;
      if (dx * dx + dy * dy + dz * dz <= eps * eps) nb[i].push_back(j);
    }
  Dbscan out;
  out.labels.assign(n, -1);
  out.core.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) out.core[i] = nb[i].size() >= static_cast<std::size_t>(min_pts);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.core[i] || out.labels[i] >= 0) continue;
    const int id = next++;
    std::vector<std::size_t> stack{i};
    out.labels[i] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      if (!out.core[p]) continue;
      for (std::size_t q : nb[p]) {
        if (out.labels[q] >= 0) continue;
        out.labels[q] = id;
        stack.push_back(q);
      }
    }
  }
  return out;
}

// True when a and b induce the same partition, noise matching noise.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if ((a[k] < 0) != (b[k] < 0)) return false;
    if (a[k] < 0) continue;
    auto [i1, new1] = ab.emplace(a[k], b[k]);
    auto [i2, new2] = ba.emplace(b[k], a[k]);
    if (i1->second != b[k] || i2->second != a[k]) return false;
  }
  return true;
}

// Max over every one-to-one assignment of the summed IoU, divided by the
// ground-truth count. Enumerates permutations of the larger side.
inline double brute_mean_iou(const std::vector<double>& iou, std::size_t np, std::size_t ng) {
  if (ng == 0 || np == 0) return 0.0;
  const std::size_t large = std::max(np, ng), small = std::min(np, ng);
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t k = 0; k < small; ++k) {
      const std::size_t p = np <= ng ? k : perm[k];
      const std::size_t g = np <= ng ? perm[k] : k;
      s += iou[p * ng + g];
    }
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(ng);
}

// Greedy confidence-ordered matching followed by AP written as the sum over
// true positives of (1 / ng) * max precision at any later rank.
inline double brute_ap(const std::vector<double>& iou, std::size_t np, std::size_t ng, const std::vector<double>& conf,
                       double thr) {
  if (ng == 0 || np == 0) return 0.0;
  std::vector<std::size_t> order(np);
  std::iota(order.begin(), order.end(), 0);
  // Insertion sort keeps equal confidences in index order.
  for (std::size_t i = 1; i < np; ++i)
    for (std::size_t j = i; j > 0 && conf[order[j]] > conf[order[j - 1]]; --j) std::swap(order[j], order[j - 1]);
  std::vector<bool> taken(ng, false);
  std::vector<int> tp(np, 0);
  for (std::size_t r = 0; r < np; ++r) {
    const std::size_t p = order[r];
    int best = -1;
    for (std::size_t g = 0; g < ng; ++g) {
      if (taken[g] || iou[p * ng + g] < thr) continue;
      if (best < 0 || iou[p * ng + g] > iou[p * ng + static_cast<std::size_t>(best)]) best = static_cast<int>(g);
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      tp[r] = 1;
    }
  }
  std::vector<double> prec(np);
  int hits = 0;
  for (std::size_t r = 0; r < np; ++r) {
    hits += tp[r];
    prec[r] = static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  double ap = 0.0;
  for (std::size_t r = 0; r < np; ++r) {
    if (!tp[r]) continue;
    double m = 0.0;
    for (std::size_t s = r; s < np; ++s) m = std::max(m, prec[s]);
    ap += m / static_cast<double>(ng);
  }
  return ap;
}

// Squared distance in cells to the nearest feature cell, by exhaustive scan.
inline std::vector<double> brute_squared_edt(const std::vector<std::uint8_t>& f, int w, int h) {
  std::vector<double> out(f.size(), 1e20);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
          if (f[static_cast<std::size_t>(v) * w + u]) {
            const double d = double(x - u) * (x - u) + double(y - v) * (y - v);
            out[static_cast<std::size_t>(y) * w + x] = std::min(out[static_cast<std::size_t>(y) * w + x], d);
          }
  return out;
}

// A cell survives when every cell within radius (Euclidean, in cells) is set
// and inside the raster.
inline std::vector<std::uint8_t> brute_erode(const std::vector<std::uint8_t>& m, int w, int h, double r) {
  std::vector<std::uint8_t> out(m.size(), 0);
  const int R = static_cast<int>(std::ceil(r)) + 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool ok = m[static_cast<std::size_t>(y) * w + x] != 0;
      for (int dy = -R; dy <= R && ok; ++dy)
        for (int dx = -R; dx <= R && ok; ++dx) {
          if (dx * dx + dy * dy > r * r + 1e-9) continue;
          const int u = x + dx, v = y + dy;
          if (u < 0 || v < 0 || u >= w || v >= h || !m[static_cast<std::size_t>(v) * w + u]) ok = false;
        }
      out[static_cast<std::size_t>(y) * w + x] = ok ? 1 : 0;
    }
  return out;
}

// Shortest 8-connected path length (meters) between two set cells with
// Dijkstra; diagonal moves need both side cells set. Infinity if none.
inline double grid_geodesic(const roomgraph::BinaryGrid& g, roomgraph::Cell a, roomgraph::Cell b) {
  const int w = g.width(), h = g.height();
  std::vector<double> dist(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const int src = a.j * w + a.i, dst = b.j * w + b.i;
  dist[static_cast<std::size_t>(src)] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, k] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(k)]) continue;
    if (k == dst) break;
    const int x = k % w, y = k / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const int u = x + dx, v = y + dy;
        if (u < 0 || v < 0 || u >= w || v >= h || !g.at(u, v)) continue;
        if (dx && dy && (!g.at(x + dx, y) || !g.at(x, y + dy))) continue;
        const double nd = d + (dx && dy ? std::sqrt(2.0) : 1.0);
        const std::size_t nk = static_cast<std::size_t>(v) * w + u;
        if (nd < dist[nk]) {
          dist[nk] = nd;
          pq.push({nd, static_cast<int>(nk)});
        }
      }
  }
  return dist[static_cast<std::size_t>(dst)] * g.spec.cell_size;
}

// Bellman-Ford over the undirected edge list.
inline double bellman_ford(const roomgraph::NavGraph& g, int a, int b) {
  std::vector<double> d(g.nodes.size(), std::numeric_limits<double>::infinity());
  d[static_cast<std::size_t>(a)] = 0.0;
  for (std::size_t it = 0; it < g.nodes.size(); ++it)
    for (const auto& e : g.edges) {
      d[static_cast<std::size_t>(e.b)] = std::min(d[static_cast<std::size_t>(e.b)], d[static_cast<std::size_t>(e.a)] + e.length);
      d[static_cast<std::size_t>(e.a)] = std::min(d[static_cast<std::size_t>(e.a)], d[static_cast<std::size_t>(e.b)] + e.length);
    }
  return d[static_cast<std::size_t>(b)];
}

// Random free-space map: a walled rectangle with rectangular pillars,
// reduced to the 4-connected component of the first free cell.
inline roomgraph::BinaryGrid random_free_map(std::mt19937_64& rng, int w, int h, double cell) {
  roomgraph::GridSpec spec{0.0, 0.0, cell, w, h};
  roomgraph::BinaryGrid g(spec, 0);
  for (int j = 1; j < h - 1; ++j)
    for (int i = 1; i < w - 1; ++i) g.at(i, j) = 1;
  std::uniform_int_distribution<int> count(0, 4);
  const int pillars = count(rng);
  for (int p = 0; p < pillars; ++p) {
    std::uniform_int_distribution<int> px(3, w - 12), py(3, h - 12), ps(3, 8);
    const int x0 = px(rng), y0 = py(rng), sx = ps(rng), sy = ps(rng);
    for (int j = y0; j < std::min(h - 1, y0 + sy); ++j)
      for (int i = x0; i < std::min(w - 1, x0 + sx); ++i) g.at(i, j) = 0;
  }
  // Keep the largest 4-connected component.
  std::vector<int> comp(spec.cell_count(), -1);
  int best = -1;
  std::size_t best_size = 0;
  int id = 0;
  for (std::size_t s = 0; s < comp.size(); ++s) {
    if (!g.cells[s] || comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = id;
    std::size_t size = 0;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(k % w), y = static_cast<int>(k / w);
      const int nx[4] = {x + 1, x - 1, x, x}, ny[4] = {y, y, y + 1, y - 1};
      for (int q = 0; q < 4; ++q) {
        if (nx[q] < 0 || ny[q] < 0 || nx[q] >= w || ny[q] >= h) continue;
        const std::size_t nk = static_cast<std::size_t>(ny[q]) * w + nx[q];
        if (g.cells[nk] && comp[nk] < 0) {
          comp[nk] = id;
          stack.push_back(nk);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = id;
    }
    ++id;
  }
  for (std::size_t s = 0; s < comp.size(); ++s) g.cells[s] = comp[s] == best ? 1 : 0;
  return g;
}

}  // namespace oracle
