#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "roomgraph/geom.hpp"
#include "roomgraph/image_io.hpp"

namespace roomgraph {

/// Unit-length, finite feature vector.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  /// Scales `values` to unit length. Throws Errc::invalid_argument for
  /// empty, zero or non-finite input.
  static EmbeddingVector normalized(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double dot(const EmbeddingVector& other) const;
  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Text / image / point-set encoder. Implementations are deterministic for
/// identical payloads, share one dimension across all three kinds, and are
/// safe to call concurrently.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed_text(const std::string& text) const = 0;
  virtual EmbeddingVector embed_image(const RgbImage& image) const = 0;
  virtual EmbeddingVector embed_points(std::span<const Vec3> points) const = 0;
  /// Diagnostics accumulated so far (for example nondeterministic replies).
  virtual std::vector<std::string> warnings() const { return {}; }
};

/// Deterministic in-process backend with fixed dimension 64.
///  - text: FNV-1a hash of the string seeds a splitmix64 stream of uniform
///    [-1, 1] components; strings registered with plant() return the
///    registered vector instead;
///  - image: 8x8 grid of block-mean luminance, (I + 1) / 256;
///  - points: after centering and unit-radius scaling, a 32-bin histogram of
///    pairwise distances over [0, 2] and a 32-bin histogram of z over
///    [-1, 1], each summing to one.
class StubBackend final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDim = 64;
  static constexpr int kImageGrid = 8;
  static constexpr int kHistogramBins = 32;

  std::string name() const override { return "stub"; }
  std::size_t dim() const override { return kDim; }
  EmbeddingVector embed_text(const std::string& text) const override;
  EmbeddingVector embed_image(const RgbImage& image) const override;
  EmbeddingVector embed_points(std::span<const Vec3> points) const override;

  /// Pins the text embedding of `text`, replacing any earlier entry.
  void plant(const std::string& text, const EmbeddingVector& vector);
  bool planted(const std::string& text) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, EmbeddingVector> anchors_;
};

struct RemoteConfig {
  std::string url;  // e.g. http://127.0.0.1:8080; "/embed" is appended
  int max_in_flight = 4;
  int retries = 2;
  double timeout_seconds = 30.0;
  bool verify_determinism = false;  // re-query memoized payloads and compare
};

/// Client of an out-of-process encoder speaking the /embed protocol:
///   POST /embed {"kind": "text", "text": s}
///               {"kind": "image", "image_png_b64": b64}
///               {"kind": "points", "points": [[x, y, z], ...]}
///   reply       {"dim": d, "vector": [d reals]}
/// Replies are renormalized; zero vectors and dimension changes are errors.
class RemoteBackend final : public EmbeddingBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ~RemoteBackend() override;

  std::string name() const override { return "remote"; }
  /// Known after the first reply; issues a probe request otherwise.
  std::size_t dim() const override;
  EmbeddingVector embed_text(const std::string& text) const override;
  EmbeddingVector embed_image(const RgbImage& image) const override;
  EmbeddingVector embed_points(std::span<const Vec3> points) const override;
  std::vector<std::string> warnings() const override;

  /// Number of HTTP requests sent so far, retries included.
  std::uint64_t requests_sent() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// ROOMGRAPH_EMBED_URL when set and non-empty, else `configured`.
std::string resolve_embed_url(const std::string& configured);

/// "stub" or "remote".
std::unique_ptr<EmbeddingBackend> make_backend(const std::string& kind, const RemoteConfig& remote = {});

struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Entry (i, j) = a[i] . b[j]. Throws Errc::invalid_argument on mixed dims.
SimilarityMatrix cosine_similarity_matrix(std::span<const EmbeddingVector> a, std::span<const EmbeddingVector> b);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed = 0xcbf29ce484222325ull);

/// splitmix64 step: advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace roomgraph
