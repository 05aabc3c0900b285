#pragma once

#include <random>
#include <string>
#include <vector>

#include "rarec/retrieval.hpp"
#include "support/oracle.hpp"

namespace testing_support {

struct RandomCorpus {
  std::size_t dim = 0;
  std::vector<oracle::Doc> docs;

  rarec::ReviewIndex index() const {
    rarec::IndexManifest manifest{"test:random", dim, docs.size(), false, "2024-01-01T00:00:00Z", 5, 2};
    std::vector<rarec::IndexRow> rows;
    std::vector<float> vectors;
    for (const auto& d : docs) {
      rows.push_back({d.doc_id, d.item_id, d.kind, d.doc_id});
      vectors.insert(vectors.end(), d.vec.begin(), d.vec.end());
    }
    return rarec::ReviewIndex(manifest, rows, vectors);
  }

  std::size_t max_reviews_per_item() const {
    std::map<std::string, std::size_t> n;
    std::size_t best = 0;
    for (const auto& d : docs) {
      if (d.kind == rarec::DocKind::Review) best = std::max(best, ++n[d.item_id]);
    }
    return best;
  }
};

inline std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal;
  std::vector<float> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Up to max_items items with 1..max_reviews reviews each; with_metadata adds
// one metadata doc per item. Rows are shuffled so item docs are not
// contiguous, and duplicate vectors are planted to exercise tie-breaks.
inline RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t max_items, std::size_t max_reviews,
                                  std::size_t dim, bool with_metadata) {
  RandomCorpus c;
  c.dim = dim;
  const std::size_t items = std::uniform_int_distribution<std::size_t>(1, max_items)(rng);
  int serial = 0;
  for (std::size_t i = 0; i < items; ++i) {
    const std::string item_id = "item" + std::to_string(1000 + i * 7 % 97);
    if (with_metadata) c.docs.push_back({"meta:" + item_id, item_id, rarec::DocKind::MetadataDoc, random_vector(rng, dim)});
    const std::size_t reviews = std::uniform_int_distribution<std::size_t>(1, max_reviews)(rng);
    for (std::size_t r = 0; r < reviews; ++r) {
      c.docs.push_back({"r" + std::to_string(serial++), item_id, rarec::DocKind::Review, random_vector(rng, dim)});
    }
  }
  if (c.docs.size() > 2 && rng() % 2 == 0) c.docs.back().vec = c.docs.front().vec;
  std::shuffle(c.docs.begin(), c.docs.end(), rng);
  return c;
}

}  // namespace testing_support
