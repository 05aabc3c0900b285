#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rarec {

// Fixed-length vector of finite floats. Construction rejects NaN/Inf.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<float> values_;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string provider_id() const = 0;
  virtual std::size_t dim() const = 0;
  // Whether produced vectors are L2-normalized; recorded in index manifests.
  virtual bool normalized() const = 0;

  virtual EmbeddingVector encode(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const = 0;
};

// Feature-hashed bag of lowercase word tokens, L2-normalized.
//
// Tokens are maximal runs of ASCII alphanumerics or non-ASCII bytes, so UTF-8
// sequences stay inside a token. Each token is hashed with 64-bit FNV-1a over
// the seed's eight little-endian bytes followed by the token bytes; the
// bucket is hash % dim. Counts are integers and the norm is summed in bucket
// order, so results are bit-identical across platforms.
class LocalHashEmbedding final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 64;

  explicit LocalHashEmbedding(std::size_t dim = kDefaultDim, std::uint64_t seed = 0);

  std::string provider_id() const override;
  std::size_t dim() const override { return dim_; }
  bool normalized() const override { return true; }

  EmbeddingVector encode(std::string_view text) const override;
  std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEmbeddingConfig {
  std::string base_url;
  // 0 means "accept whatever the first response reports".
  std::size_t dim = 0;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{200};
  int max_in_flight = 4;
  std::size_t batch_size = 64;
};

// POST <base_url>/embed {"texts": [...]} -> {"dim": n, "vectors": [[...]...]}.
// Vectors are passed through without normalization.
class RemoteEmbedding final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedding(RemoteEmbeddingConfig config);

  std::string provider_id() const override;
  std::size_t dim() const override;
  bool normalized() const override { return false; }

  EmbeddingVector encode(std::string_view text) const override;
  std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<EmbeddingVector> post_batch(std::span<const std::string> texts) const;

  RemoteEmbeddingConfig config_;
  mutable std::atomic<std::size_t> dim_;
  mutable std::counting_semaphore<> in_flight_;
};

// Builds a provider from an "encoder" config object:
// {"provider": "local", "dim": 64, "seed": 0} or
// {"provider": "remote", "base_url": ..., "dim"?, "model"?, "timeout_ms"?, "retries"?}.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const nlohmann::json& config);

}  // namespace rarec
