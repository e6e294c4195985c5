#include "roomgraph/densitymap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace roomgraph {

void LayerSelectParams::validate() const {
  if (num_slices < 1) throw Error(Errc::invalid_argument, "num_slices must be >= 1");
  if (!(delta_b >= 0.0 && delta_b < delta_t && delta_t <= 1.0)) {
    throw Error(Errc::invalid_argument, "layer window needs 0 <= delta_b < delta_t <= 1");
  }
}

void CombineParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::invalid_argument, "gamma must lie in [0, 1]");
  if (!(vote_fraction > 0.0 && vote_fraction <= 1.0)) {
    throw Error(Errc::invalid_argument, "vote_fraction must lie in (0, 1]");
  }
  if (!(density_norm_percentile > 0.0 && density_norm_percentile <= 100.0)) {
    throw Error(Errc::invalid_argument, "density_norm_percentile must lie in (0, 100]");
  }
}

// Relative slack so that S_k landing exactly on a bound (as computed in
// exact arithmetic) counts as equality whichever way the product rounds.
constexpr double kBoundSlack = 1e-12;

bool keep_layer(std::size_t occupied, std::size_t total, const LayerSelectParams& params) {
  const double s = static_cast<double>(total);
  const double sk = static_cast<double>(occupied);
  const double slack = kBoundSlack * std::max(1.0, s);
  return params.delta_b * s + slack < sk && sk < params.delta_t * s - slack;
}

LayerSelection select_layers(std::span<const CountGrid> layer_grids, const LayerSelectParams& params) {
  params.validate();
  if (layer_grids.empty()) throw Error(Errc::invalid_argument, "no layer grids to select from");
  LayerSelection out;
  out.stats.total = layer_grids.front().spec.cell_count();
  for (std::size_t k = 0; k < layer_grids.size(); ++k) {
    const CountGrid& g = layer_grids[k];
    require_same_spec(g.spec, layer_grids.front().spec, "select_layers");
    const auto occupied = static_cast<std::size_t>(
        std::count_if(g.cells.begin(), g.cells.end(), [](std::uint32_t c) { return c > 0; }));
    out.stats.occupied.push_back(occupied);
    if (keep_layer(occupied, out.stats.total, params)) {
      out.stats.selected.push_back(k);
      out.grids.push_back(g);
    }
  }
  return out;
}

BorderMap merge_border(const GridSpec& spec, std::span<const BinaryGrid> selected, double vote_fraction) {
  BorderMap out{BinaryGrid(spec), selected.empty()};
  if (selected.empty()) return out;
  std::vector<std::uint32_t> votes(spec.cell_count(), 0);
  for (const BinaryGrid& g : selected) {
    require_same_spec(g.spec, spec, "merge_border");
    for (std::size_t k = 0; k < votes.size(); ++k) votes[k] += g.cells[k] ? 1 : 0;
  }
  const double m = static_cast<double>(selected.size());
  const double threshold = vote_fraction * m - kBoundSlack * m;
  for (std::size_t k = 0; k < votes.size(); ++k) {
    out.border.cells[k] = static_cast<double>(votes[k]) >= threshold ? 1 : 0;
  }
  return out;
}

ValueGrid normalize_density(const CountGrid& density, double percentile) {
  std::vector<std::uint32_t> occupied;
  for (std::uint32_t c : density.cells) {
    if (c > 0) occupied.push_back(c);
  }
  ValueGrid out(density.spec, 0.0);
  if (occupied.empty()) return out;
  // Nearest-rank percentile over occupied cells.
  const auto rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(occupied.size())));
  const std::size_t nth = std::clamp<std::size_t>(rank, 1, occupied.size()) - 1;
  std::nth_element(occupied.begin(), occupied.begin() + static_cast<std::ptrdiff_t>(nth), occupied.end());
  const double scale = occupied[nth];
  for (std::size_t k = 0; k < density.cells.size(); ++k) {
    out.cells[k] = std::min(1.0, density.cells[k] / scale);
  }
  return out;
}

ValueGrid combine(const ValueGrid& den_norm, const BinaryGrid& border, double gamma) {
  require_same_spec(den_norm.spec, border.spec, "combine");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::invalid_argument, "gamma must lie in [0, 1]");
  ValueGrid out(den_norm.spec);
  for (std::size_t k = 0; k < out.cells.size(); ++k) {
    const double d = den_norm.cells[k];
    if (!(d >= 0.0 && d <= 1.0)) {
      throw Error(Errc::out_of_range, "density value " + std::to_string(d) + " outside [0, 1] at cell " + std::to_string(k));
    }
    if (border.cells[k] > 1) throw Error(Errc::out_of_range, "border map is not binary at cell " + std::to_string(k));
    out.cells[k] = gamma * d + (1.0 - gamma) * border.cells[k];
  }
  return out;
}

DensityMaps build_density_maps(const PointCloud& cloud, const GridSpec& spec,
                               const LayerSelectParams& layers, const CombineParams& combine_params) {
  layers.validate();
  combine_params.validate();
  DensityMaps maps;
  maps.density = project_to_grid(cloud, spec);
  maps.density_norm = normalize_density(maps.density, combine_params.density_norm_percentile);

  const auto slices = slice_layers(cloud, layers.num_slices);
  std::vector<CountGrid> slice_grids;
  slice_grids.reserve(slices.size());
  for (const PointCloud& s : slices) slice_grids.push_back(project_to_grid(s, spec));

  LayerSelection selection = select_layers(slice_grids, layers);
  std::vector<BinaryGrid> binary;
  binary.reserve(selection.grids.size());
  for (const CountGrid& g : selection.grids) binary.push_back(binarize(g));

  BorderMap border = merge_border(spec, binary, combine_params.vote_fraction);
  maps.border = std::move(border.border);
  maps.empty_selection = border.empty_selection;
  maps.stats = std::move(selection.stats);
  maps.combined = combine(maps.density_norm, maps.border, combine_params.gamma);
  return maps;
}

}  // namespace roomgraph
