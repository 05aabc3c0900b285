#pragma once

// Brute-force reference implementations used to check the retrieval core.
// They share no code with the library: plain loops, long double accumulation,
// a full sort instead of partial sorts.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rarec/corpus.hpp"

namespace oracle {

struct Doc {
  std::string doc_id;
  std::string item_id;
  rarec::DocKind kind;
  std::vector<float> vec;
};

struct Hit {
  std::string doc_id;
  double score;
};

struct Item {
  std::string item_id;
  double score;
  std::vector<Hit> hits;
};

inline double dot(const std::vector<float>& a, const std::vector<float>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

// Score every doc, sort all of them, then walk the sorted list handing each
// item its first m eligible docs.
inline std::vector<Item> late_fusion(const std::vector<Doc>& docs, const std::vector<float>& query, int k, int m,
                                     const std::set<std::string>& exclude = {}, bool reviews = true,
                                     bool metadata = true) {
  std::vector<std::pair<const Doc*, double>> scored;
  for (const auto& d : docs) scored.emplace_back(&d, dot(d.vec, query));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first->doc_id < b.first->doc_id;
  });
  std::map<std::string, std::vector<Hit>> per_item;
  for (const auto& [doc, score] : scored) {
    if (exclude.count(doc->item_id)) continue;
    const bool eligible = doc->kind == rarec::DocKind::Review ? reviews : metadata;
    if (!eligible) continue;
    auto& hits = per_item[doc->item_id];
    if (static_cast<int>(hits.size()) < m) hits.push_back({doc->doc_id, score});
  }
  std::vector<Item> items;
  for (auto& [id, hits] : per_item) {
    long double sum = 0;
    for (const auto& h : hits) sum += h.score;
    items.push_back({id, static_cast<double>(sum / hits.size()), hits});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  if (static_cast<int>(items.size()) > k) items.resize(k);
  return items;
}

// Mean review vector per item, then one dot product.
inline std::vector<Item> early_fusion(const std::vector<Doc>& docs, const std::vector<float>& query, int k) {
  std::map<std::string, std::pair<std::vector<long double>, int>> sums;
  for (const auto& d : docs) {
    if (d.kind != rarec::DocKind::Review) continue;
    auto& [sum, n] = sums[d.item_id];
    sum.resize(d.vec.size(), 0);
    for (std::size_t i = 0; i < d.vec.size(); ++i) sum[i] += d.vec[i];
    ++n;
  }
  std::vector<Item> items;
  for (const auto& [id, acc] : sums) {
    long double s = 0;
    for (std::size_t i = 0; i < query.size(); ++i) s += acc.first[i] / acc.second * query[i];
    items.push_back({id, static_cast<double>(s), {}});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  if (static_cast<int>(items.size()) > k) items.resize(k);
  return items;
}

}  // namespace oracle
