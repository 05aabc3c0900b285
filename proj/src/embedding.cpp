#include "rarec/embedding.hpp"

#include <cmath>
#include <thread>

#include "httplib.h"
#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::uint64_t seed, std::string_view token) {
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  for (unsigned char c : token) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

bool is_token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

void require_text(std::string_view text) {
  if (trim(text).empty()) throw EncodingError("cannot encode empty text");
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw EncodingError("embedding vector has zero dimensions");
  for (float v : values_) {
    if (!std::isfinite(v)) throw EncodingError("embedding vector contains a non-finite entry");
  }
}

LocalHashEmbedding::LocalHashEmbedding(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw PreconditionError("embedding dim must be positive");
}

std::string LocalHashEmbedding::provider_id() const {
  return "local-hash:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

std::vector<std::string> LocalHashEmbedding::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector LocalHashEmbedding::encode(std::string_view text) const {
  require_text(text);
  std::vector<std::int64_t> counts(dim_, 0);
  for (const auto& token : tokenize(text)) ++counts[fnv1a(seed_, token) % dim_];

  double sum_sq = 0.0;
  for (auto c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  std::vector<float> values(dim_, 0.0f);
  if (sum_sq > 0.0) {
    const double norm = std::sqrt(sum_sq);
    for (std::size_t i = 0; i < dim_; ++i) values[i] = static_cast<float>(static_cast<double>(counts[i]) / norm);
  }
  return EmbeddingVector(std::move(values));
}

std::vector<EmbeddingVector> LocalHashEmbedding::encode_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(encode(texts[i]));
    } catch (const EncodingError& e) {
      throw EncodingError("text " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

RemoteEmbedding::RemoteEmbedding(RemoteEmbeddingConfig config)
    : config_(std::move(config)), dim_(config_.dim), in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.base_url.empty()) throw PreconditionError("remote encoder needs a base_url");
  if (config_.batch_size == 0) config_.batch_size = 1;
}

std::string RemoteEmbedding::provider_id() const {
  return "remote:" + (config_.model.empty() ? config_.base_url : config_.model);
}

std::size_t RemoteEmbedding::dim() const {
  if (dim_.load() == 0) {
    // Probe once so callers can size buffers before the first real batch.
    encode("dimension probe");
  }
  return dim_.load();
}

EmbeddingVector RemoteEmbedding::encode(std::string_view text) const {
  require_text(text);
  std::vector<std::string> one{std::string(text)};
  return std::move(post_batch(one).front());
}

std::vector<EmbeddingVector> RemoteEmbedding::encode_batch(std::span<const std::string> texts) const {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (trim(texts[i]).empty()) throw EncodingError("text " + std::to_string(i) + ": cannot encode empty text");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    auto chunk = texts.subspan(start, std::min(config_.batch_size, texts.size() - start));
    auto vectors = post_batch(chunk);
    for (auto& v : vectors) out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedding::post_batch(std::span<const std::string> texts) const {
  nlohmann::json body{{"texts", nlohmann::json(std::vector<std::string>(texts.begin(), texts.end()))}};
  if (!config_.model.empty()) body["model"] = config_.model;
  const std::string payload = body.dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  std::string last_error;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Post("/embed", payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("encoder returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("vectors") ||
        !parsed["vectors"].is_array()) {
      throw ProtocolError("encoder response is not {\"dim\", \"vectors\"}");
    }
    const auto& vectors = parsed["vectors"];
    if (vectors.size() != texts.size()) {
      throw ProtocolError("encoder returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(texts.size()) + " texts");
    }
    std::size_t reported = parsed.value("dim", std::size_t{0});
    std::size_t expected = dim_.load();
    if (expected == 0) {
      expected = reported != 0 ? reported : (vectors.empty() ? 0 : vectors[0].size());
      dim_.store(expected);
    }
    if (reported != 0 && reported != expected) {
      throw ProtocolError("encoder dim " + std::to_string(reported) + " does not match expected " +
                          std::to_string(expected));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
      if (!v.is_array() || v.size() != expected) {
        throw ProtocolError("encoder vector has wrong dimension (expected " + std::to_string(expected) + ")");
      }
      std::vector<float> values;
      values.reserve(expected);
      for (const auto& x : v) {
        if (!x.is_number()) throw ProtocolError("encoder vector contains a non-number");
        values.push_back(x.get<float>());
      }
      try {
        out.emplace_back(std::move(values));
      } catch (const EncodingError& e) {
        throw ProtocolError(std::string("encoder vector invalid: ") + e.what());
      }
    }
    return out;
  }
  throw TransportError("encoder request to " + config_.base_url + "/embed failed after " +
                       std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const nlohmann::json& config) {
  const std::string kind = config.value("provider", std::string("local"));
  if (kind == "local") {
    return std::make_unique<LocalHashEmbedding>(config.value("dim", LocalHashEmbedding::kDefaultDim),
                                                config.value("seed", std::uint64_t{0}));
  }
  if (kind == "remote") {
    RemoteEmbeddingConfig rc;
    rc.base_url = config.value("base_url", std::string());
    rc.dim = config.value("dim", std::size_t{0});
    rc.model = config.value("model", std::string());
    rc.timeout = std::chrono::milliseconds(config.value("timeout_ms", 30000));
    rc.retries = config.value("retries", 2);
    rc.backoff = std::chrono::milliseconds(config.value("backoff_ms", 200));
    rc.max_in_flight = config.value("max_in_flight", 4);
    rc.batch_size = config.value("batch_size", std::size_t{64});
    return std::make_unique<RemoteEmbedding>(std::move(rc));
  }
  throw ValidationError("unknown encoder provider '" + kind + "'");
}

}  // namespace rarec
