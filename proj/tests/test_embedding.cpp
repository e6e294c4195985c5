#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "embed_server.hpp"
#include "roomgraph/embedding.hpp"
#include "roomgraph/synth.hpp"

using namespace roomgraph;

namespace {

double norm(const EmbeddingVector& v) {
  double s = 0;
  for (double x : v.values()) s += x * x;
  return std::sqrt(s);
}

// Independent recomputation of the stub point signature.
std::vector<double> naive_point_signature(const std::vector<Vec3>& pts) {
  double cx = 0, cy = 0, cz = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
    cz += p.z;
  }
  const double n = static_cast<double>(pts.size());
  cx /= n;
  cy /= n;
  cz /= n;
  double r = 0;
  for (const auto& p : pts) r = std::max(r, std::sqrt((p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy) + (p.z - cz) * (p.z - cz)));
  std::vector<std::array<double, 3>> q;
  for (const auto& p : pts) q.push_back({(p.x - cx) / r, (p.y - cy) / r, (p.z - cz) / r});
  std::vector<double> v(64, 0.0);
  double pairs = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j) {
      const double d = std::hypot(q[i][0] - q[j][0], q[i][1] - q[j][1], q[i][2] - q[j][2]);
      v[std::min(31, static_cast<int>(d * 16))] += 1;
      pairs += 1;
    }
  for (int b = 0; b < 32; ++b) v[b] /= pairs;
  for (const auto& p : q) v[32 + std::clamp(static_cast<int>((p[2] + 1) * 16), 0, 31)] += 1.0 / n;
  double s = 0;
  for (double x : v) s += x * x;
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

std::vector<Vec3> sample(const PointCloud& c, std::size_t stride) {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < c.size(); k += stride) out.push_back(c.points[k]);
  return out;
}

}  // namespace

TEST(StubBackend, DeterministicAndUnitNorm) {
  StubBackend stub;
  EXPECT_EQ(stub.embed_text("kitchen"), stub.embed_text("kitchen"));
  EXPECT_NE(stub.embed_text("kitchen"), stub.embed_text("Kitchen"));
  EXPECT_NEAR(norm(stub.embed_text("kitchen")), 1.0, 1e-12);
  RgbImage img(40, 30, {10, 200, 30});
  img.set(3, 3, {255, 255, 255});
  EXPECT_NEAR(norm(stub.embed_image(img)), 1.0, 1e-12);
  EXPECT_EQ(stub.embed_image(img), stub.embed_image(img));
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 1}};
  EXPECT_NEAR(norm(stub.embed_points(pts)), 1.0, 1e-12);
  EXPECT_EQ(stub.dim(), 64u);
}

TEST(StubBackend, RejectsEmptyPayloads) {
  StubBackend stub;
  EXPECT_THROW(stub.embed_text(""), Error);
  EXPECT_THROW(stub.embed_points({}), Error);
  EXPECT_THROW(stub.embed_image(RgbImage(4, 4)), Error);
  EXPECT_THROW(EmbeddingVector::normalized({0.0, 0.0}), Error);
  EXPECT_THROW(EmbeddingVector::normalized({1.0, NAN}), Error);
}

TEST(StubBackend, PointSignatureMatchesNaiveRecompute) {
  StubBackend stub;
  for (const auto& label : object_archetypes()) {
    const auto pts = sample(archetype_points(label, 0.3, -0.2, 0.05), 1);
    const auto want = naive_point_signature(pts);
    const auto got = stub.embed_points(pts);
    for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(got[k], want[k], 1e-12) << label << " " << k;
  }
}

TEST(StubBackend, PoleAndSlabSignaturesSeparate) {
  const auto pole = naive_point_signature(sample(archetype_points("floor lamp", 0, 0, 0.05), 1));
  const auto slab = naive_point_signature(sample(archetype_points("table", 0, 0, 0.05), 1));
  double c = 0;
  for (std::size_t k = 0; k < 64; ++k) c += pole[k] * slab[k];
  EXPECT_LT(c, 0.9);
  StubBackend stub;
  const auto a = stub.embed_points(sample(archetype_points("floor lamp", 0, 0, 0.05), 1));
  const auto b = stub.embed_points(sample(archetype_points("table", 0, 0, 0.05), 1));
  EXPECT_NEAR(a.dot(b), c, 1e-12);
}

TEST(StubBackend, PlantOverridesText) {
  StubBackend stub;
  const auto v = EmbeddingVector::normalized(std::vector<double>(64, 1.0));
  EXPECT_FALSE(stub.planted("office"));
  stub.plant("office", v);
  EXPECT_TRUE(stub.planted("office"));
  EXPECT_EQ(stub.embed_text("office"), v);
  EXPECT_THROW(stub.plant("x", EmbeddingVector::normalized({1.0})), Error);
}

TEST(CosineMatrix, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  auto rand_vec = [&] {
    std::vector<double> v(16);
    for (auto& x : v) x = g(rng);
    return EmbeddingVector::normalized(v);
  };
  std::vector<EmbeddingVector> a, b;
  for (int k = 0; k < 5; ++k) a.push_back(rand_vec());
  for (int k = 0; k < 7; ++k) b.push_back(rand_vec());
  const auto m = cosine_similarity_matrix(a, b);
  ASSERT_EQ(m.rows, 5u);
  ASSERT_EQ(m.cols, 7u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 16; ++k) s += a[i][k] * b[j][k];
      EXPECT_NEAR(m.at(i, j), s, 1e-12);
      EXPECT_LE(std::abs(m.at(i, j)), 1.0 + 1e-12);
    }
  const auto self = cosine_similarity_matrix(a, a);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(self.at(i, i), 1.0, 1e-9);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(self.at(i, j), self.at(j, i), 1e-9);
  }
  std::vector<EmbeddingVector> other{EmbeddingVector::normalized({1.0, 0.0})};
  EXPECT_THROW(cosine_similarity_matrix(a, other), Error);
  const auto e = EmbeddingVector::normalized({1.0, 0.0});
  const auto f = EmbeddingVector::normalized({0.0, 2.0});
  EXPECT_DOUBLE_EQ(e.dot(f), 0.0);
  EXPECT_DOUBLE_EQ(e.dot(e), 1.0);
}

TEST(MakeBackend, SelectsAndValidates) {
  EXPECT_EQ(make_backend("stub")->name(), "stub");
  EXPECT_THROW(make_backend("remote"), Error);
  EXPECT_THROW(make_backend("clip"), Error);
  RemoteConfig rc;
  rc.url = "http://127.0.0.1:1";
  EXPECT_EQ(make_backend("remote", rc)->name(), "remote");
}

TEST(RemoteBackend, RenormalizesAndMemoizes) {
  testing_support::EmbedServer server;
  RemoteConfig rc;
  rc.url = server.url();
  RemoteBackend remote(rc);
  const auto a = remote.embed_text("kitchen");
  EXPECT_NEAR(norm(a), 1.0, 1e-12);
  EXPECT_EQ(remote.embed_text("kitchen"), a);
  EXPECT_EQ(remote.requests_sent(), 1u);
  EXPECT_EQ(remote.dim(), 64u);
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 0, 1}};
  StubBackend stub;
  const auto p = remote.embed_points(pts);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(p[k], stub.embed_points(pts)[k], 1e-12);
  EXPECT_NEAR(norm(remote.embed_image(RgbImage(16, 16, {1, 2, 3}))), 1.0, 1e-12);
  EXPECT_TRUE(remote.warnings().empty());
}

TEST(RemoteBackend, RetriesServerErrors) {
  testing_support::EmbedServer server;
  server.fail_first = 2;
  RemoteConfig rc;
  rc.url = server.url();
  rc.retries = 2;
  RemoteBackend remote(rc);
  EXPECT_NO_THROW(remote.embed_text("office"));
  EXPECT_EQ(remote.requests_sent(), 3u);

  testing_support::EmbedServer down;
  down.fail_first = 100;
  rc.url = down.url();
  rc.retries = 1;
  RemoteBackend failing(rc);
  try {
    failing.embed_text("office");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::backend);
  }
  EXPECT_EQ(failing.requests_sent(), 2u);
}

TEST(RemoteBackend, ClientErrorsAreNotRetried) {
  testing_support::EmbedServer server;
  server.client_error = 422;
  RemoteConfig rc;
  rc.url = server.url();
  RemoteBackend remote(rc);
  EXPECT_THROW(remote.embed_text("office"), Error);
  EXPECT_EQ(remote.requests_sent(), 1u);
}

TEST(RemoteBackend, NondeterministicReplySurfacesWarning) {
  testing_support::EmbedServer server;
  server.jitter = true;
  RemoteConfig rc;
  rc.url = server.url();
  rc.verify_determinism = true;
  RemoteBackend remote(rc);
  const auto first = remote.embed_text("bedroom");
  EXPECT_EQ(remote.embed_text("bedroom"), first);
  ASSERT_EQ(remote.warnings().size(), 1u);
  EXPECT_NE(remote.warnings()[0].find("nondeterministic"), std::string::npos);
}

TEST(RemoteBackend, DimensionChangeIsAnError) {
  testing_support::EmbedServer server;
  server.dim_after_first = 32;
  RemoteConfig rc;
  rc.url = server.url();
  RemoteBackend remote(rc);
  remote.embed_text("a");
  try {
    remote.embed_text("b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::backend);
  }
}

TEST(RemoteBackend, ConcurrentCallsAgree) {
  testing_support::EmbedServer server;
  RemoteConfig rc;
  rc.url = server.url();
  rc.max_in_flight = 2;
  RemoteBackend remote(rc);
  StubBackend stub;
  std::vector<std::thread> threads;
  std::vector<EmbeddingVector> got(16);
  for (int t = 0; t < 16; ++t)
    threads.emplace_back([&, t] { got[t] = remote.embed_text("label " + std::to_string(t % 4)); });
  for (auto& th : threads) th.join();
  for (int t = 4; t < 16; ++t) EXPECT_EQ(got[t], got[t % 4]);
}

TEST(ResolveEmbedUrl, EnvironmentOverrides) {
  ::setenv("ROOMGRAPH_EMBED_URL", "http://override:9", 1);
  EXPECT_EQ(resolve_embed_url("http://cfg:1"), "http://override:9");
  ::setenv("ROOMGRAPH_EMBED_URL", "", 1);
  EXPECT_EQ(resolve_embed_url("http://cfg:1"), "http://cfg:1");
  ::unsetenv("ROOMGRAPH_EMBED_URL");
}
