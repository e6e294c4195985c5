#include "roomgraph/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <fstream>

namespace roomgraph {

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h) {
  rgb.resize(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t k = 0; k < rgb.size(); k += 3) {
    rgb[k] = fill.r;
    rgb[k + 1] = fill.g;
    rgb[k + 2] = fill.b;
  }
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

template <class T>
void write_pgm_scaled(const std::filesystem::path& path, const Grid<T>& grid) {
  double top = 0.0;
  for (const T& v : grid.cells) top = std::max(top, static_cast<double>(v));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, path.string() + ": cannot open for writing");
  out << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(grid.width()));
  for (int j = grid.height() - 1; j >= 0; --j) {
    for (int i = 0; i < grid.width(); ++i) {
      const double v = top > 0.0 ? static_cast<double>(grid.at(i, j)) / top : 0.0;
      row[static_cast<std::size_t>(i)] = static_cast<char>(static_cast<int>(std::lround(v * 255.0)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error(Errc::io, path.string() + ": write failed");
}

Rgb palette(int label) {
  // Golden-angle hue walk keeps neighbouring labels visually distinct.
  const double h = std::fmod(label * 137.508, 360.0) / 60.0;
  const double s = 0.65, v = 0.92;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto ch = [m](double u) { return static_cast<std::uint8_t>(std::lround((u + m) * 255.0)); };
  return {ch(r), ch(g), ch(b)};
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0) throw Error(Errc::invalid_argument, "cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::io, "png_create_info_struct failed");
  }
  std::vector<std::uint8_t> bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io, "libpng failed while encoding");
  }
  png_set_write_fn(png, &bytes, append_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    auto* row = const_cast<png_bytep>(image.rgb.data() + 3 * static_cast<std::size_t>(y) * image.width);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return bytes;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, path.string() + ": write failed");
}

void write_pgm(const std::filesystem::path& path, const CountGrid& grid) { write_pgm_scaled(path, grid); }
void write_pgm(const std::filesystem::path& path, const ValueGrid& grid) { write_pgm_scaled(path, grid); }
void write_pgm(const std::filesystem::path& path, const BinaryGrid& grid) { write_pgm_scaled(path, grid); }

RgbImage grid_image(const ValueGrid& grid) {
  RgbImage img(grid.width(), grid.height());
  for (int j = 0; j < grid.height(); ++j) {
    for (int i = 0; i < grid.width(); ++i) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(grid.at(i, j), 0.0, 1.0) * 255.0));
      img.set(i, grid.height() - 1 - j, {v, v, v});
    }
  }
  return img;
}

RgbImage label_image(const GridSpec& spec, std::span<const int> labels) {
  if (labels.size() != spec.cell_count()) throw Error(Errc::spec_mismatch, "label raster size differs from grid");
  RgbImage img(spec.width, spec.height);
  for (int j = 0; j < spec.height; ++j) {
    for (int i = 0; i < spec.width; ++i) {
      const int l = labels[spec.index(i, j)];
      const Rgb c = l >= 0 ? palette(l) : (l == -2 ? Rgb{0, 0, 0} : Rgb{255, 255, 255});
      img.set(i, spec.height - 1 - j, c);
    }
  }
  return img;
}

RgbImage contact_sheet(std::span<const RgbImage> images, int columns) {
  if (images.empty()) throw Error(Errc::invalid_argument, "contact sheet needs at least one image");
  columns = std::max(1, std::min<int>(columns, static_cast<int>(images.size())));
  const int rows = (static_cast<int>(images.size()) + columns - 1) / columns;
  const int w = images.front().width;
  const int h = images.front().height;
  RgbImage sheet(w * columns, h * rows, {255, 255, 255});
  for (std::size_t k = 0; k < images.size(); ++k) {
    const RgbImage& img = images[k];
    if (img.width != w || img.height != h) throw Error(Errc::invalid_argument, "contact sheet images differ in size");
    const int ox = static_cast<int>(k % columns) * w;
    const int oy = static_cast<int>(k / columns) * h;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) sheet.set(ox + x, oy + y, img.pixel(x, y));
    }
  }
  return sheet;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t k = 0;
  for (; k + 2 < bytes.size(); k += 3) {
    const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8) | bytes[k + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (k < bytes.size()) {
    std::uint32_t v = bytes[k] << 16;
    if (k + 1 < bytes.size()) v |= bytes[k + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += k + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace roomgraph
