#include "roomgraph/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "roomgraph/kernels.hpp"

namespace roomgraph {

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::invalid_argument, "embedding has no components");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "embedding has a non-finite component");
    sq += v * v;
  }
  if (!(sq > 0.0)) throw Error(Errc::invalid_argument, "embedding is the zero vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  EmbeddingVector out;
  out.values_ = std::move(values);
  return out;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
  if (other.dim() != dim()) throw Error(Errc::invalid_argument, "embedding dimensions differ");
  double s = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) s += values_[k] * other.values_[k];
  return s;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), seed);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

EmbeddingVector StubBackend::embed_text(const std::string& text) const {
  if (text.empty()) throw Error(Errc::invalid_argument, "cannot embed empty text");
  {
    std::lock_guard lock(mutex_);
    if (auto it = anchors_.find(text); it != anchors_.end()) return it->second;
  }
  std::uint64_t state = fnv1a64(text);
  std::vector<double> v(kDim);
  for (double& x : v) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    x = 2.0 * u - 1.0;
  }
  return EmbeddingVector::normalized(std::move(v));
}

EmbeddingVector StubBackend::embed_image(const RgbImage& image) const {
  if (image.width < kImageGrid || image.height < kImageGrid) {
    throw Error(Errc::invalid_argument, "image too small to embed");
  }
  std::vector<double> v(kDim, 0.0);
  for (int by = 0; by < kImageGrid; ++by) {
    const int y0 = by * image.height / kImageGrid, y1 = (by + 1) * image.height / kImageGrid;
    for (int bx = 0; bx < kImageGrid; ++bx) {
      const int x0 = bx * image.width / kImageGrid, x1 = (bx + 1) * image.width / kImageGrid;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const Rgb c = image.pixel(x, y);
          sum += 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
        }
      }
      const double mean = sum / static_cast<double>((y1 - y0) * (x1 - x0));
      v[static_cast<std::size_t>(by * kImageGrid + bx)] = (mean + 1.0) / 256.0;
    }
  }
  return EmbeddingVector::normalized(std::move(v));
}

EmbeddingVector StubBackend::embed_points(std::span<const Vec3> points) const {
  if (points.empty()) throw Error(Errc::invalid_argument, "cannot embed an empty point set");
  Vec3 centroid;
  for (const Vec3& p : points) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(points.size()));
  std::vector<Vec3> local(points.size());
  double radius = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    local[k] = points[k] - centroid;
    radius = std::max(radius, local[k].norm());
  }
  if (radius > 0.0) {
    for (Vec3& p : local) p = p * (1.0 / radius);
  }

  std::vector<double> v(kDim, 0.0);
  if (local.size() > 1) {
    const auto hist = kernels::distance_histogram(local, kHistogramBins, 2.0);
    std::uint64_t total = 0;
    for (auto c : hist) total += c;
    for (int b = 0; b < kHistogramBins; ++b) v[b] = static_cast<double>(hist[b]) / static_cast<double>(total);
  } else {
    v[0] = 1.0;
  }
  for (const Vec3& p : local) {
    const int b = std::clamp(static_cast<int>((p.z + 1.0) * 0.5 * kHistogramBins), 0, kHistogramBins - 1);
    v[static_cast<std::size_t>(kHistogramBins + b)] += 1.0 / static_cast<double>(local.size());
  }
  return EmbeddingVector::normalized(std::move(v));
}

void StubBackend::plant(const std::string& text, const EmbeddingVector& vector) {
  if (vector.dim() != kDim) throw Error(Errc::invalid_argument, "planted vector has the wrong dimension");
  std::lock_guard lock(mutex_);
  anchors_[text] = vector;
}

bool StubBackend::planted(const std::string& text) const {
  std::lock_guard lock(mutex_);
  return anchors_.count(text) != 0;
}

std::string resolve_embed_url(const std::string& configured) {
  if (const char* env = std::getenv("ROOMGRAPH_EMBED_URL"); env != nullptr && *env != '\0') return env;
  return configured;
}

std::unique_ptr<EmbeddingBackend> make_backend(const std::string& kind, const RemoteConfig& remote) {
  if (kind == "stub") return std::make_unique<StubBackend>();
  if (kind == "remote") {
    RemoteConfig config = remote;
    config.url = resolve_embed_url(config.url);
    if (config.url.empty()) throw Error(Errc::invalid_argument, "remote backend selected but no endpoint URL configured");
    return std::make_unique<RemoteBackend>(config);
  }
  throw Error(Errc::invalid_argument, "unknown embedding backend '" + kind + "'");
}

SimilarityMatrix cosine_similarity_matrix(std::span<const EmbeddingVector> a, std::span<const EmbeddingVector> b) {
  SimilarityMatrix m;
  m.rows = a.size();
  m.cols = b.size();
  if (a.empty() || b.empty()) return m;
  const std::size_t dim = a.front().dim();
  std::vector<double> fa, fb;
  fa.reserve(a.size() * dim);
  fb.reserve(b.size() * dim);
  for (const auto& v : a) {
    if (v.dim() != dim) throw Error(Errc::invalid_argument, "embedding dimensions differ");
    fa.insert(fa.end(), v.values().begin(), v.values().end());
  }
  for (const auto& v : b) {
    if (v.dim() != dim) throw Error(Errc::invalid_argument, "embedding dimensions differ");
    fb.insert(fb.end(), v.values().begin(), v.values().end());
  }
  m.values = kernels::dot_matrix(fa, a.size(), fb, b.size(), dim);
  return m;
}

}  // namespace roomgraph
