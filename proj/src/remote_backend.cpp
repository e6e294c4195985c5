#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "roomgraph/embedding.hpp"

namespace roomgraph {
namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // request path, ends in /embed
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(Errc::invalid_argument, "embedding URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.base = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (prefix.size() >= 6 && prefix.compare(prefix.size() - 6, 6, "/embed") == 0) {
    e.path = prefix;
  } else {
    e.path = prefix + "/embed";
  }
  return e;
}

}  // namespace

struct RemoteBackend::Impl {
  RemoteConfig config;
  Endpoint endpoint;
  std::counting_semaphore<> slots;
  mutable std::mutex mutex;
  std::map<std::string, EmbeddingVector> memo;  // keyed by request body
  std::vector<std::string> warnings;
  std::size_t dim = 0;
  std::atomic<std::uint64_t> sent{0};

  explicit Impl(RemoteConfig c)
      : config(std::move(c)), endpoint(parse_endpoint(config.url)), slots(std::max(1, config.max_in_flight)) {}

  EmbeddingVector post(const std::string& body) {
    slots.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots};

    httplib::Client client(endpoint.base);
    const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    std::string last_error;
    for (int attempt = 0; attempt <= config.retries; ++attempt) {
      ++sent;
      auto res = client.Post(endpoint.path, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
      } else if (res->status >= 500) {
        last_error = "server returned HTTP " + std::to_string(res->status);
      } else if (res->status != 200) {
        throw Error(Errc::backend, config.url + ": server returned HTTP " + std::to_string(res->status) + ": " + res->body);
      } else {
        return decode(res->body);
      }
      if (attempt < config.retries) std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
    }
    throw Error(Errc::backend, config.url + ": " + last_error + " (after " + std::to_string(config.retries) + " retries)");
  }

  EmbeddingVector decode(const std::string& text) {
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::backend, std::string("malformed embedding reply: ") + e.what());
    }
    if (!reply.contains("vector") || !reply["vector"].is_array()) {
      throw Error(Errc::backend, "embedding reply lacks a \"vector\" array");
    }
    std::vector<double> values;
    try {
      values = reply["vector"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::backend, std::string("embedding reply vector is not numeric: ") + e.what());
    }
    if (reply.contains("dim") && reply["dim"].get<std::size_t>() != values.size()) {
      throw Error(Errc::backend, "embedding reply dim disagrees with its vector length");
    }
    EmbeddingVector v;
    try {
      v = EmbeddingVector::normalized(std::move(values));
    } catch (const Error& e) {
      throw Error(Errc::backend, std::string("unusable embedding reply: ") + e.what());
    }
    std::lock_guard lock(mutex);
    if (dim == 0) {
      dim = v.dim();
    } else if (dim != v.dim()) {
      throw Error(Errc::backend, "embedding dimension changed from " + std::to_string(dim) + " to " + std::to_string(v.dim()));
    }
    return v;
  }

  EmbeddingVector request(const nlohmann::json& payload) {
    const std::string body = payload.dump();
    {
      std::lock_guard lock(mutex);
      auto it = memo.find(body);
      if (it != memo.end() && !config.verify_determinism) return it->second;
    }
    EmbeddingVector v = post(body);
    std::lock_guard lock(mutex);
    auto [it, inserted] = memo.emplace(body, v);
    if (!inserted) {
      double diff = 0.0;
      for (std::size_t k = 0; k < v.dim(); ++k) diff = std::max(diff, std::abs(v[k] - it->second[k]));
      if (diff > 1e-6) {
        std::ostringstream msg;
        msg << "nondeterministic reply for a repeated " << payload.value("kind", "?") << " payload (max deviation " << diff
            << "); keeping the first reply";
        warnings.push_back(msg.str());
      }
      return it->second;
    }
    return v;
  }
};

RemoteBackend::RemoteBackend(RemoteConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
RemoteBackend::~RemoteBackend() = default;

std::size_t RemoteBackend::dim() const {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->dim != 0) return impl_->dim;
  }
  return embed_text("dimension probe").dim();
}

EmbeddingVector RemoteBackend::embed_text(const std::string& text) const {
  if (text.empty()) throw Error(Errc::invalid_argument, "cannot embed empty text");
  return impl_->request({{"kind", "text"}, {"text", text}});
}

EmbeddingVector RemoteBackend::embed_image(const RgbImage& image) const {
  if (image.width <= 0 || image.height <= 0) throw Error(Errc::invalid_argument, "cannot embed an empty image");
  return impl_->request({{"kind", "image"}, {"image_png_b64", base64_encode(encode_png(image))}});
}

EmbeddingVector RemoteBackend::embed_points(std::span<const Vec3> points) const {
  if (points.empty()) throw Error(Errc::invalid_argument, "cannot embed an empty point set");
  nlohmann::json list = nlohmann::json::array();
  for (const Vec3& p : points) list.push_back({p.x, p.y, p.z});
  return impl_->request({{"kind", "points"}, {"points", std::move(list)}});
}

std::vector<std::string> RemoteBackend::warnings() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->warnings;
}

std::uint64_t RemoteBackend::requests_sent() const { return impl_->sent.load(); }

}  // namespace roomgraph
