#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roomgraph/geom.hpp"

namespace roomgraph {

/// Row-major 8-bit RGB raster; row 0 is the top of the picture.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {});

  Rgb pixel(int x, int y) const {
    const std::size_t k = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[k], rgb[k + 1], rgb[k + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t k = 3 * (static_cast<std::size_t>(y) * width + x);
    rgb[k] = c.r;
    rgb[k + 1] = c.g;
    rgb[k + 2] = c.b;
  }
  bool operator==(const RgbImage&) const = default;
};

std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Grayscale PGM with values scaled linearly so the grid maximum maps to 255.
/// Grids are drawn north-up (row 0 = largest j).
void write_pgm(const std::filesystem::path& path, const CountGrid& grid);
void write_pgm(const std::filesystem::path& path, const ValueGrid& grid);
void write_pgm(const std::filesystem::path& path, const BinaryGrid& grid);

RgbImage grid_image(const ValueGrid& grid);

/// Distinct color per label >= 0; label -1 renders white, -2 black.
RgbImage label_image(const GridSpec& spec, std::span<const int> labels);

/// Tiles images left-to-right, top-to-bottom.
RgbImage contact_sheet(std::span<const RgbImage> images, int columns);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace roomgraph
