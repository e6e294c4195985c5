#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "roomgraph/ply.hpp"

using namespace roomgraph;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "roomgraph_ply_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

Errc load_error(const fs::path& p) {
  try {
    load_point_cloud(p);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error for " << p;
  return Errc::invalid_argument;
}

PointCloud random_cloud(bool colors) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> c(0, 255);
  PointCloud cloud;
  for (int k = 0; k < 257; ++k) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    if (colors) {
      cloud.add(p, {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng))});
    } else {
      cloud.add(p);
    }
  }
  return cloud;
}

}  // namespace

TEST(Ply, BinaryRoundTripIsExact) {
  for (bool colors : {false, true}) {
    const PointCloud c = random_cloud(colors);
    const fs::path p = temp_file("bin.ply");
    save_point_cloud(p, c, PlyFormat::binary_little_endian);
    const PointCloud back = load_point_cloud(p);
    EXPECT_EQ(back.points, c.points);
    EXPECT_EQ(back.colors, c.colors);
  }
}

TEST(Ply, AsciiRoundTripKeepsPrecision) {
  const PointCloud c = random_cloud(true);
  const fs::path p = temp_file("ascii.ply");
  save_point_cloud(p, c, PlyFormat::ascii);
  const PointCloud back = load_point_cloud(p);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_NEAR(back.points[k].x, c.points[k].x, 1e-12);
    EXPECT_NEAR(back.points[k].z, c.points[k].z, 1e-12);
  }
  EXPECT_EQ(back.colors, c.colors);
}

TEST(Ply, ReadsFloatVerticesWithFacesAfterThem) {
  const fs::path p = temp_file("faces.ply");
  write_bytes(p,
              "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
              "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
              "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
              "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0.5 0 0 255\n3 0 1 2\n");
  const PointCloud c = load_point_cloud(p);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_FLOAT_EQ(static_cast<float>(c.points[2].z), 0.5f);
  EXPECT_EQ(c.colors[1], (Rgb{0, 255, 0}));
}

TEST(Ply, DistinctErrorCodes) {
  EXPECT_EQ(load_error(temp_file("does_not_exist.ply")), Errc::missing_file);

  const fs::path bad_magic = temp_file("magic.ply");
  write_bytes(bad_magic, "plx\nformat ascii 1.0\nend_header\n");
  EXPECT_EQ(load_error(bad_magic), Errc::header);

  const fs::path big = temp_file("big_endian.ply");
  write_bytes(big, "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
  EXPECT_EQ(load_error(big), Errc::unsupported_layout);

  const fs::path no_xyz = temp_file("no_xyz.ply");
  write_bytes(no_xyz, "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n");
  EXPECT_EQ(load_error(no_xyz), Errc::unsupported_layout);

  const fs::path short_ascii = temp_file("short.ply");
  write_bytes(short_ascii, "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n");
  EXPECT_EQ(load_error(short_ascii), Errc::truncated);

  const fs::path short_bin = temp_file("short_bin.ply");
  write_bytes(short_bin, std::string("ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n") + std::string(10, '\0'));
  EXPECT_EQ(load_error(short_bin), Errc::truncated);
}
