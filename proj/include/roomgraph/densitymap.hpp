#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "roomgraph/geom.hpp"

namespace roomgraph {

/// Coverage window for keeping a z-slice: a slice survives when its occupied
/// area S_k satisfies delta_b * S < S_k < delta_t * S, S being the footprint.
struct LayerSelectParams {
  int num_slices = 12;
  double delta_b = 1.0 / 15.0;
  double delta_t = 1.0 / 5.0;

  void validate() const;
};

struct LayerStats {
  std::vector<std::size_t> occupied;  // S_k per slice
  std::size_t total = 0;              // S
  std::vector<std::size_t> selected;  // indices of surviving slices, ascending
  std::size_t selected_count() const { return selected.size(); }
};

struct LayerSelection {
  std::vector<CountGrid> grids;
  LayerStats stats;
};

struct CombineParams {
  double gamma = 0.9;
  double vote_fraction = 0.75;
  double density_norm_percentile = 95.0;

  void validate() const;
};

/// Pure form of the coverage test, shared by select_layers.
bool keep_layer(std::size_t occupied, std::size_t total, const LayerSelectParams& params);

LayerSelection select_layers(std::span<const CountGrid> layer_grids, const LayerSelectParams& params);

struct BorderMap {
  BinaryGrid border;
  bool empty_selection = false;
};

/// A cell becomes border when at least vote_fraction * M of the M binary
/// layers mark it (real-valued threshold).
BorderMap merge_border(const GridSpec& spec, std::span<const BinaryGrid> selected, double vote_fraction);

/// counts / percentile-of-occupied-counts, clamped to [0, 1].
ValueGrid normalize_density(const CountGrid& density, double percentile);

/// gamma * den_norm + (1 - gamma) * border, cellwise.
ValueGrid combine(const ValueGrid& den_norm, const BinaryGrid& border, double gamma);

struct DensityMaps {
  CountGrid density;
  ValueGrid density_norm;
  BinaryGrid border;
  ValueGrid combined;
  LayerStats stats;
  bool empty_selection = false;
};

DensityMaps build_density_maps(const PointCloud& cloud, const GridSpec& spec,
                               const LayerSelectParams& layers, const CombineParams& combine_params);

}  // namespace roomgraph
