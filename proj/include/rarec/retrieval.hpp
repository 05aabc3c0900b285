#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rarec/corpus.hpp"
#include "rarec/embedding.hpp"

namespace rarec {

struct IndexManifest {
  std::string provider_id;
  std::size_t dim = 0;
  std::size_t doc_count = 0;
  bool normalized = false;
  std::string build_timestamp;
  int default_m = 5;
  int default_k = 2;

  bool operator==(const IndexManifest&) const = default;
};

struct IndexRow {
  std::string doc_id;
  std::string item_id;
  DocKind kind;
  std::string text;

  bool operator==(const IndexRow&) const = default;
};

// Optional IVF-style layout: rows clustered around `count` centroids by
// inner product.
struct PartitionLayout {
  std::size_t count = 0;
  std::vector<float> centroids;           // count x dim, row-major
  std::vector<std::uint32_t> assignment;  // one partition id per row

  bool operator==(const PartitionLayout&) const = default;
};

// Immutable embedding store over review and metadata documents.
class ReviewIndex {
 public:
  // Validates shapes and builds the item directory.
  ReviewIndex(IndexManifest manifest, std::vector<IndexRow> rows, std::vector<float> vectors,
              std::optional<PartitionLayout> partitions = std::nullopt);

  const IndexManifest& manifest() const { return manifest_; }
  std::size_t dim() const { return manifest_.dim; }
  std::size_t size() const { return rows_.size(); }

  const std::vector<IndexRow>& rows() const { return rows_; }
  const IndexRow& row(std::size_t r) const { return rows_.at(r); }
  std::span<const float> vectors() const { return vectors_; }
  std::span<const float> vector(std::size_t r) const;

  // item_id -> row ids (ascending), iterated in item_id order.
  const std::map<std::string, std::vector<std::uint32_t>>& item_directory() const { return item_rows_; }
  std::optional<std::uint32_t> find_doc(const std::string& doc_id) const;

  bool has_partitions() const { return partitions_.has_value(); }
  const PartitionLayout& partitions() const;
  // Rows of partition p, ascending.
  const std::vector<std::uint32_t>& partition_members(std::size_t p) const;

 private:
  IndexManifest manifest_;
  std::vector<IndexRow> rows_;
  std::vector<float> vectors_;
  std::map<std::string, std::vector<std::uint32_t>> item_rows_;
  std::unordered_map<std::string, std::uint32_t> doc_lookup_;
  std::optional<PartitionLayout> partitions_;
  std::vector<std::vector<std::uint32_t>> partition_rows_;
};

struct BuildOptions {
  int default_m = 5;
  int default_k = 2;
  // When unset: $SOURCE_DATE_EPOCH if present, otherwise the current time.
  std::optional<std::string> build_timestamp;
  std::size_t batch_size = 64;
};

ReviewIndex build_index(const std::vector<Document>& documents, const EmbeddingProvider& provider,
                        const BuildOptions& options = {});

struct PartitionOptions {
  std::size_t partitions = 64;
  int iterations = 10;
  std::uint64_t seed = 0;
};

// Spherical k-means over the row vectors (plain means when the index is not
// normalized). Returns a copy of the index carrying the layout.
ReviewIndex with_partitions(const ReviewIndex& index, const PartitionOptions& options);

struct DocKinds {
  bool review = true;
  bool metadata = true;

  static DocKinds all() { return {true, true}; }
  static DocKinds reviews_only() { return {true, false}; }
  bool accepts(DocKind kind) const { return kind == DocKind::Review ? review : metadata; }
  bool empty() const { return !review && !metadata; }
};

struct Evidence {
  std::string doc_id;
  DocKind kind;
  double score;

  bool operator==(const Evidence&) const = default;
};

struct ScoredItem {
  std::string item_id;
  double fused_score;
  // The documents that were fused, best first.
  std::vector<Evidence> evidence;

  bool operator==(const ScoredItem&) const = default;
};

struct RetrievalOptions {
  int k = 2;
  int m = 5;
  std::set<std::string> exclude;
  DocKinds kinds = DocKinds::all();
};

std::vector<std::pair<std::string, double>> score_documents(const ReviewIndex& index,
                                                            std::span<const float> query,
                                                            std::span<const std::string> candidate_doc_ids);

// Late fusion: each item's score is the mean of its top-min(m, n_i) eligible
// document scores. Sorted by fused score descending, then item_id ascending.
std::vector<ScoredItem> retrieve_items(const ReviewIndex& index, std::span<const float> query,
                                       const RetrievalOptions& options);

// Baseline: each item is the mean of its review vectors, scored once.
std::vector<ScoredItem> retrieve_items_early_fusion(const ReviewIndex& index, std::span<const float> query,
                                                    int k, const std::set<std::string>& exclude = {});

// Late fusion restricted to the rows of the `probes` partitions whose
// centroids score highest against the query.
std::vector<ScoredItem> retrieve_items_approx(const ReviewIndex& index, std::span<const float> query,
                                              const RetrievalOptions& options, std::size_t probes);

// Top-n documents of one item, best first (ties by doc_id).
std::vector<Evidence> top_item_documents(const ReviewIndex& index, std::span<const float> query,
                                         const std::string& item_id, std::size_t n, DocKinds kinds);

// On-disk layout: manifest.json, vectors.bin (little-endian float32,
// doc_count x dim), docs.jsonl, and partitions.json when a layout exists.
void save_index(const ReviewIndex& index, const std::filesystem::path& dir);
ReviewIndex load_index(const std::filesystem::path& dir);

nlohmann::json to_json(const IndexManifest& manifest);
nlohmann::json to_json(const ScoredItem& item);

}  // namespace rarec
