#include "rarec/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <random>

#include "rarec/error.hpp"
#include "rarec/kernels.hpp"

namespace rarec {

namespace {

std::string format_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string default_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    return format_utc(static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10)));
  }
  return format_utc(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

void check_query(const ReviewIndex& index, std::span<const float> query) {
  if (query.size() != index.dim()) {
    throw PreconditionError("query dim " + std::to_string(query.size()) + " does not match index dim " +
                            std::to_string(index.dim()));
  }
}

void check_options(const RetrievalOptions& options) {
  if (options.k < 1) throw PreconditionError("k must be >= 1");
  if (options.m < 1) throw PreconditionError("m must be >= 1");
  if (options.kinds.empty()) throw PreconditionError("at least one document kind must be eligible");
}

bool better(const Evidence& a, const Evidence& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

bool better_item(const ScoredItem& a, const ScoredItem& b) {
  if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
  return a.item_id < b.item_id;
}

// scores[r] is only read where scored[r] is set.
std::vector<ScoredItem> fuse(const ReviewIndex& index, std::span<const double> scores,
                             const std::vector<char>* scored, const RetrievalOptions& options) {
  std::vector<ScoredItem> items;
  std::vector<Evidence> pool;
  const auto m = static_cast<std::size_t>(options.m);
  for (const auto& [item_id, item_rows] : index.item_directory()) {
    if (options.exclude.contains(item_id)) continue;
    pool.clear();
    for (auto r : item_rows) {
      const auto& row = index.row(r);
      if (!options.kinds.accepts(row.kind)) continue;
      if (scored != nullptr && !(*scored)[r]) continue;
      pool.push_back({row.doc_id, row.kind, scores[r]});
    }
    if (pool.empty()) continue;
    const std::size_t take = std::min(m, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), better);
    pool.resize(take);
    double sum = 0.0;
    for (const auto& e : pool) sum += e.score;
    items.push_back({item_id, sum / static_cast<double>(take), pool});
  }
  const std::size_t k = std::min(static_cast<std::size_t>(options.k), items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(), better_item);
  items.resize(k);
  return items;
}

}  // namespace

ReviewIndex::ReviewIndex(IndexManifest manifest, std::vector<IndexRow> rows, std::vector<float> vectors,
                         std::optional<PartitionLayout> partitions)
    : manifest_(std::move(manifest)),
      rows_(std::move(rows)),
      vectors_(std::move(vectors)),
      partitions_(std::move(partitions)) {
  if (manifest_.dim == 0) throw ValidationError("index dim must be positive");
  if (rows_.empty()) throw ValidationError("index has no documents");
  if (manifest_.doc_count != rows_.size()) {
    throw ValidationError("manifest doc_count " + std::to_string(manifest_.doc_count) + " but " +
                          std::to_string(rows_.size()) + " document rows");
  }
  if (vectors_.size() != rows_.size() * manifest_.dim) {
    throw ValidationError("vector storage holds " + std::to_string(vectors_.size()) + " floats, expected " +
                          std::to_string(rows_.size() * manifest_.dim));
  }
  if (rows_.size() > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("index too large");
  for (std::uint32_t r = 0; r < rows_.size(); ++r) {
    if (!doc_lookup_.emplace(rows_[r].doc_id, r).second) {
      throw ValidationError("duplicate doc_id '" + rows_[r].doc_id + "' in index");
    }
    item_rows_[rows_[r].item_id].push_back(r);
  }
  if (partitions_) {
    const auto& p = *partitions_;
    if (p.count == 0 || p.centroids.size() != p.count * manifest_.dim || p.assignment.size() != rows_.size()) {
      throw ValidationError("partition layout does not match the index shape");
    }
    partition_rows_.assign(p.count, {});
    for (std::uint32_t r = 0; r < rows_.size(); ++r) {
      if (p.assignment[r] >= p.count) throw ValidationError("partition assignment out of range");
      partition_rows_[p.assignment[r]].push_back(r);
    }
  }
}

std::span<const float> ReviewIndex::vector(std::size_t r) const {
  if (r >= rows_.size()) throw PreconditionError("row out of range");
  return std::span<const float>(vectors_).subspan(r * manifest_.dim, manifest_.dim);
}

std::optional<std::uint32_t> ReviewIndex::find_doc(const std::string& doc_id) const {
  auto it = doc_lookup_.find(doc_id);
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

const PartitionLayout& ReviewIndex::partitions() const {
  if (!partitions_) throw PreconditionError("index has no partition layout");
  return *partitions_;
}

const std::vector<std::uint32_t>& ReviewIndex::partition_members(std::size_t p) const {
  return partition_rows_.at(p);
}

ReviewIndex build_index(const std::vector<Document>& documents, const EmbeddingProvider& provider,
                        const BuildOptions& options) {
  if (documents.empty()) throw PreconditionError("cannot build an index over zero documents");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);

  std::vector<IndexRow> rows;
  rows.reserve(documents.size());
  std::vector<float> vectors;
  std::size_t dim = 0;
  std::vector<std::string> texts;
  for (std::size_t start = 0; start < documents.size(); start += batch) {
    const std::size_t end = std::min(documents.size(), start + batch);
    texts.clear();
    for (std::size_t i = start; i < end; ++i) texts.push_back(documents[i].text);
    std::vector<EmbeddingVector> encoded;
    try {
      encoded = provider.encode_batch(texts);
    } catch (const Error& e) {
      throw EncodingError("encoding documents starting at '" + documents[start].doc_id + "' failed: " + e.what());
    }
    for (std::size_t i = start; i < end; ++i) {
      const auto& v = encoded[i - start];
      if (dim == 0) {
        dim = v.dim();
        vectors.reserve(dim * documents.size());
      }
      if (v.dim() != dim) {
        throw ProtocolError("document '" + documents[i].doc_id + "' encoded with dim " + std::to_string(v.dim()) +
                            ", expected " + std::to_string(dim));
      }
      vectors.insert(vectors.end(), v.values().begin(), v.values().end());
      const auto& d = documents[i];
      rows.push_back({d.doc_id, d.item_id, d.kind, d.text});
    }
  }

  IndexManifest manifest;
  manifest.provider_id = provider.provider_id();
  manifest.dim = dim;
  manifest.doc_count = rows.size();
  manifest.normalized = provider.normalized();
  manifest.build_timestamp = options.build_timestamp.value_or(default_timestamp());
  manifest.default_m = options.default_m;
  manifest.default_k = options.default_k;
  return ReviewIndex(std::move(manifest), std::move(rows), std::move(vectors));
}

ReviewIndex with_partitions(const ReviewIndex& index, const PartitionOptions& options) {
  const std::size_t n = index.size();
  const std::size_t dim = index.dim();
  const std::size_t p = options.partitions;
  if (p == 0 || p > n) {
    throw PreconditionError("partition count must be in [1, " + std::to_string(n) + "]");
  }
  auto data = index.vectors();

  // Seeded Fisher-Yates over row ids; mt19937_64's output sequence is fixed
  // by the standard, unlike std::shuffle.
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

  std::vector<float> centroids(p * dim);
  for (std::size_t c = 0; c < p; ++c) {
    auto src = index.vector(order[c]);
    std::copy(src.begin(), src.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }

  std::vector<std::uint32_t> assignment(n, 0);
  std::vector<double> sums(p * dim);
  std::vector<std::size_t> counts(p);
  for (int iter = 0; iter < std::max(1, options.iterations); ++iter) {
    kernels::assign_max_inner_product_parallel(data, dim, centroids, assignment);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto c = assignment[r];
      ++counts[c];
      const float* v = data.data() + r * dim;
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += v[d];
    }
    for (std::size_t c = 0; c < p; ++c) {
      if (counts[c] == 0) continue;  // keep the previous centroid
      double norm_sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        sums[c * dim + d] /= static_cast<double>(counts[c]);
        norm_sq += sums[c * dim + d] * sums[c * dim + d];
      }
      const double scale = (index.manifest().normalized && norm_sq > 0.0) ? 1.0 / std::sqrt(norm_sq) : 1.0;
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] * scale);
    }
  }
  kernels::assign_max_inner_product_parallel(data, dim, centroids, assignment);

  PartitionLayout layout{p, std::move(centroids), std::move(assignment)};
  return ReviewIndex(index.manifest(), index.rows(), std::vector<float>(data.begin(), data.end()),
                     std::move(layout));
}

std::vector<std::pair<std::string, double>> score_documents(const ReviewIndex& index,
                                                            std::span<const float> query,
                                                            std::span<const std::string> candidate_doc_ids) {
  check_query(index, query);
  std::vector<std::uint32_t> rows;
  rows.reserve(candidate_doc_ids.size());
  for (const auto& id : candidate_doc_ids) {
    auto r = index.find_doc(id);
    if (!r) throw NotFoundError("unknown doc_id '" + id + "'");
    rows.push_back(*r);
  }
  std::vector<double> scores(rows.size());
  kernels::score_selected_parallel(index.vectors(), index.dim(), query, rows, scores);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(candidate_doc_ids[i], scores[i]);
  return out;
}

std::vector<ScoredItem> retrieve_items(const ReviewIndex& index, std::span<const float> query,
                                       const RetrievalOptions& options) {
  check_query(index, query);
  check_options(options);
  std::vector<double> scores(index.size());
  kernels::score_rows_parallel(index.vectors(), index.dim(), query, scores);
  return fuse(index, scores, nullptr, options);
}

std::vector<ScoredItem> retrieve_items_early_fusion(const ReviewIndex& index, std::span<const float> query,
                                                    int k, const std::set<std::string>& exclude) {
  check_query(index, query);
  if (k < 1) throw PreconditionError("k must be >= 1");
  const std::size_t dim = index.dim();
  std::vector<ScoredItem> items;
  std::vector<double> mean(dim);
  for (const auto& [item_id, item_rows] : index.item_directory()) {
    if (exclude.contains(item_id)) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::size_t reviews = 0;
    for (auto r : item_rows) {
      if (index.row(r).kind != DocKind::Review) continue;
      auto v = index.vector(r);
      for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d];
      ++reviews;
    }
    if (reviews == 0) continue;
    double score = 0.0;
    for (std::size_t d = 0; d < dim; ++d) score += (mean[d] / static_cast<double>(reviews)) * query[d];
    items.push_back({item_id, score, {}});
  }
  const std::size_t keep = std::min(static_cast<std::size_t>(k), items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep), items.end(), better_item);
  items.resize(keep);
  return items;
}

std::vector<ScoredItem> retrieve_items_approx(const ReviewIndex& index, std::span<const float> query,
                                              const RetrievalOptions& options, std::size_t probes) {
  check_query(index, query);
  check_options(options);
  const auto& layout = index.partitions();
  if (probes < 1) throw PreconditionError("probe count must be >= 1");
  probes = std::min(probes, layout.count);

  std::vector<double> centroid_scores(layout.count);
  kernels::score_rows_serial(layout.centroids, index.dim(), query, centroid_scores);
  std::vector<std::uint32_t> order(layout.count);
  for (std::uint32_t c = 0; c < layout.count; ++c) order[c] = c;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probes), order.end(),
                    [&](auto a, auto b) {
                      if (centroid_scores[a] != centroid_scores[b]) return centroid_scores[a] > centroid_scores[b];
                      return a < b;
                    });

  std::vector<std::uint32_t> rows;
  for (std::size_t i = 0; i < probes; ++i) {
    const auto& members = index.partition_members(order[i]);
    rows.insert(rows.end(), members.begin(), members.end());
  }
  std::sort(rows.begin(), rows.end());

  std::vector<double> selected(rows.size());
  kernels::score_selected_parallel(index.vectors(), index.dim(), query, rows, selected);
  std::vector<double> scores(index.size(), 0.0);
  std::vector<char> scored(index.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    scores[rows[i]] = selected[i];
    scored[rows[i]] = 1;
  }
  return fuse(index, scores, &scored, options);
}

std::vector<Evidence> top_item_documents(const ReviewIndex& index, std::span<const float> query,
                                         const std::string& item_id, std::size_t n, DocKinds kinds) {
  check_query(index, query);
  auto it = index.item_directory().find(item_id);
  if (it == index.item_directory().end()) return {};
  std::vector<std::uint32_t> rows;
  for (auto r : it->second) {
    if (kinds.accepts(index.row(r).kind)) rows.push_back(r);
  }
  std::vector<double> scores(rows.size());
  kernels::score_selected_serial(index.vectors(), index.dim(), query, rows, scores);
  std::vector<Evidence> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back({index.row(rows[i]).doc_id, index.row(rows[i]).kind, scores[i]});
  std::sort(out.begin(), out.end(), better);
  if (out.size() > n) out.resize(n);
  return out;
}

nlohmann::json to_json(const ScoredItem& item) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : item.evidence) {
    evidence.push_back({{"doc_id", e.doc_id}, {"kind", to_string(e.kind)}, {"score", e.score}});
  }
  return {{"item_id", item.item_id}, {"fused_score", item.fused_score}, {"evidence", evidence}};
}

}  // namespace rarec
