#pragma once

#include <filesystem>

#include "roomgraph/geom.hpp"

namespace roomgraph {

enum class PlyFormat { ascii, binary_little_endian };

// Reads the vertex element of a PLY file (ascii or binary_little_endian).
// x/y/z are required; red/green/blue (or r/g/b) are picked up when present.
// Failures carry distinct codes: missing_file, header, truncated,
// unsupported_layout.
PointCloud load_point_cloud(const std::filesystem::path& path);

// Coordinates are written as doubles so a binary round trip is exact.
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::binary_little_endian);

}  // namespace roomgraph
