#include "roomgraph/ply.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace roomgraph {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool ascii = false;
  std::vector<Element> elements;
};

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

bool parse_scalar(const std::string& word, Scalar& out) {
  static const std::pair<const char*, Scalar> table[] = {
      {"char", Scalar::i8},     {"int8", Scalar::i8},     {"uchar", Scalar::u8},
      {"uint8", Scalar::u8},    {"short", Scalar::i16},   {"int16", Scalar::i16},
      {"ushort", Scalar::u16},  {"uint16", Scalar::u16},  {"int", Scalar::i32},
      {"int32", Scalar::i32},   {"uint", Scalar::u32},    {"uint32", Scalar::u32},
      {"float", Scalar::f32},   {"float32", Scalar::f32}, {"double", Scalar::f64},
      {"float64", Scalar::f64},
  };
  for (const auto& [name, s] : table) {
    if (word == name) {
      out = s;
      return true;
    }
  }
  return false;
}

double read_binary_scalar(const char* p, Scalar s) {
  switch (s) {
    case Scalar::i8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case Scalar::u8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case Scalar::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::u32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case Scalar::f64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

[[noreturn]] void fail(Errc code, const std::filesystem::path& path, const std::string& msg) {
  throw Error(code, path.string() + ": " + msg);
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    fail(Errc::header, path, "missing 'ply' magic line");
  }
  Header header;
  bool have_format = false;
  while (true) {
    if (!std::getline(in, line)) fail(Errc::header, path, "header has no end_header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string kind;
      words >> kind;
      if (kind == "ascii") {
        header.ascii = true;
      } else if (kind == "binary_little_endian") {
        header.ascii = false;
      } else if (kind == "binary_big_endian") {
        fail(Errc::unsupported_layout, path, "binary_big_endian is not supported");
      } else {
        fail(Errc::header, path, "unknown format '" + kind + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      words >> e.name >> count;
      if (e.name.empty() || count < 0) fail(Errc::header, path, "malformed element line: " + line);
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) fail(Errc::header, path, "property before any element");
      Property prop;
      std::string type;
      words >> type;
      if (type == "list") {
        std::string count_type, item_type;
        words >> count_type >> item_type >> prop.name;
        Scalar dummy;
        if (!parse_scalar(count_type, dummy) || !parse_scalar(item_type, prop.type)) {
          fail(Errc::header, path, "bad list property: " + line);
        }
        prop.is_list = true;
      } else {
        if (!parse_scalar(type, prop.type)) fail(Errc::header, path, "unknown property type: " + line);
        words >> prop.name;
      }
      if (prop.name.empty()) fail(Errc::header, path, "property without a name: " + line);
      header.elements.back().properties.push_back(prop);
    } else {
      fail(Errc::header, path, "unexpected header line: " + line);
    }
  }
  if (!have_format) fail(Errc::header, path, "header has no format line");
  return header;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const Element& vertex, const std::filesystem::path& path) {
  VertexLayout layout;
  for (std::size_t k = 0; k < vertex.properties.size(); ++k) {
    const Property& p = vertex.properties[k];
    if (p.is_list) fail(Errc::unsupported_layout, path, "list property '" + p.name + "' in vertex element");
    const int idx = static_cast<int>(k);
    if (p.name == "x") layout.x = idx;
    if (p.name == "y") layout.y = idx;
    if (p.name == "z") layout.z = idx;
    if (p.name == "red" || p.name == "r") layout.r = idx;
    if (p.name == "green" || p.name == "g") layout.g = idx;
    if (p.name == "blue" || p.name == "b") layout.b = idx;
  }
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    fail(Errc::unsupported_layout, path, "vertex element lacks x/y/z properties");
  }
  return layout;
}

std::uint8_t to_channel(double v, Scalar type) {
  if (type == Scalar::f32 || type == Scalar::f64) v *= 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

void emit_vertex(PointCloud& cloud, const std::vector<double>& values, const VertexLayout& layout,
                 const Element& vertex) {
  const Vec3 p{values[layout.x], values[layout.y], values[layout.z]};
  if (layout.r >= 0 && layout.g >= 0 && layout.b >= 0) {
    cloud.add(p, {to_channel(values[layout.r], vertex.properties[layout.r].type),
                  to_channel(values[layout.g], vertex.properties[layout.g].type),
                  to_channel(values[layout.b], vertex.properties[layout.b].type)});
  } else {
    cloud.add(p);
  }
}

PointCloud read_ascii(std::istream& in, const Header& header, std::size_t vertex_index,
                      const std::filesystem::path& path) {
  const Element& vertex = header.elements[vertex_index];
  const VertexLayout layout = vertex_layout(vertex, path);
  std::string line;
  for (std::size_t e = 0; e < vertex_index; ++e) {
    for (std::size_t k = 0; k < header.elements[e].count; ++k) {
      if (!std::getline(in, line)) fail(Errc::truncated, path, "payload ends inside element '" + header.elements[e].name + "'");
    }
  }
  PointCloud cloud;
  cloud.points.reserve(vertex.count);
  std::vector<double> values(vertex.properties.size());
  for (std::size_t k = 0; k < vertex.count; ++k) {
    if (!std::getline(in, line)) {
      fail(Errc::truncated, path, "expected " + std::to_string(vertex.count) + " vertices, found " + std::to_string(k));
    }
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t p = 0; p < values.size(); ++p) {
      while (cur < end && (*cur == ' ' || *cur == '\t' || *cur == '\r')) ++cur;
      auto [next, ec] = std::from_chars(cur, end, values[p]);
      if (ec != std::errc()) {
        fail(Errc::truncated, path, "vertex " + std::to_string(k) + " has too few or malformed values");
      }
      cur = next;
    }
    emit_vertex(cloud, values, layout, vertex);
  }
  return cloud;
}

PointCloud read_binary(std::istream& in, const Header& header, std::size_t vertex_index,
                       const std::filesystem::path& path) {
  const Element& vertex = header.elements[vertex_index];
  const VertexLayout layout = vertex_layout(vertex, path);
  for (std::size_t e = 0; e < vertex_index; ++e) {
    const Element& skip = header.elements[e];
    std::size_t record = 0;
    for (const Property& p : skip.properties) {
      if (p.is_list) fail(Errc::unsupported_layout, path, "list property in element '" + skip.name + "' preceding vertices");
      record += scalar_size(p.type);
    }
    in.seekg(static_cast<std::streamoff>(record * skip.count), std::ios::cur);
    if (!in) fail(Errc::truncated, path, "payload ends inside element '" + skip.name + "'");
  }
  std::vector<std::size_t> offsets;
  std::size_t record = 0;
  for (const Property& p : vertex.properties) {
    offsets.push_back(record);
    record += scalar_size(p.type);
  }
  std::vector<char> buffer(record * vertex.count);
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size()) {
    fail(Errc::truncated, path, "expected " + std::to_string(buffer.size()) + " vertex bytes, found " + std::to_string(in.gcount()));
  }
  PointCloud cloud;
  cloud.points.reserve(vertex.count);
  std::vector<double> values(vertex.properties.size());
  for (std::size_t k = 0; k < vertex.count; ++k) {
    const char* rec = buffer.data() + k * record;
    for (std::size_t p = 0; p < values.size(); ++p) {
      values[p] = read_binary_scalar(rec + offsets[p], vertex.properties[p].type);
    }
    emit_vertex(cloud, values, layout, vertex);
  }
  return cloud;
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_file, path, "cannot open file");
  const Header header = read_header(in, path);
  auto it = std::find_if(header.elements.begin(), header.elements.end(),
                         [](const Element& e) { return e.name == "vertex"; });
  if (it == header.elements.end()) fail(Errc::unsupported_layout, path, "no vertex element");
  const auto vertex_index = static_cast<std::size_t>(it - header.elements.begin());
  PointCloud cloud = header.ascii ? read_ascii(in, header, vertex_index, path)
                                  : read_binary(in, header, vertex_index, path);
  cloud.validate();
  return cloud;
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, path.string() + ": cannot open for writing");
  const bool ascii = format == PlyFormat::ascii;
  out << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";

  if (ascii) {
    char buf[64];
    auto put = [&](double v) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, end - buf);
    };
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      const Vec3& p = cloud.points[k];
      put(p.x);
      out << ' ';
      put(p.y);
      out << ' ';
      put(p.z);
      if (cloud.has_colors()) {
        const Rgb c = cloud.colors[k];
        out << ' ' << int{c.r} << ' ' << int{c.g} << ' ' << int{c.b};
      }
      out << '\n';
    }
  } else {
    const std::size_t record = 3 * sizeof(double) + (cloud.has_colors() ? 3 : 0);
    std::vector<char> buffer(record * cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      char* rec = buffer.data() + k * record;
      const Vec3& p = cloud.points[k];
      std::memcpy(rec, &p.x, 8);
      std::memcpy(rec + 8, &p.y, 8);
      std::memcpy(rec + 16, &p.z, 8);
      if (cloud.has_colors()) {
        rec[24] = static_cast<char>(cloud.colors[k].r);
        rec[25] = static_cast<char>(cloud.colors[k].g);
        rec[26] = static_cast<char>(cloud.colors[k].b);
      }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  }
  if (!out) throw Error(Errc::io, path.string() + ": write failed");
}

}  // namespace roomgraph
