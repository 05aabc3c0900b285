#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace rarec {

// Metadata values are restricted to JSON scalars (string, number, bool, null).
using MetadataMap = std::map<std::string, nlohmann::json>;

struct ItemRecord {
  std::string item_id;
  std::string name;
  MetadataMap metadata;

  bool operator==(const ItemRecord&) const = default;
};

struct ReviewRecord {
  std::string review_id;
  std::string item_id;
  std::string text;

  bool operator==(const ReviewRecord&) const = default;
};

enum class DocKind { Review, MetadataDoc };

std::string to_string(DocKind kind);
DocKind doc_kind_from_string(const std::string& s);

struct Document {
  std::string doc_id;
  std::string item_id;
  DocKind kind;
  std::string text;

  bool operator==(const Document&) const = default;
};

enum class OrphanMode { Strict, Lenient };

struct SkippedReview {
  std::string review_id;
  std::string item_id;
  std::string reason;
};

struct ReviewParseResult {
  std::vector<ReviewRecord> reviews;
  std::vector<SkippedReview> skipped;
};

std::vector<ItemRecord> parse_items(std::istream& in);
ReviewParseResult parse_reviews(std::istream& in, const std::set<std::string>& known_item_ids,
                                OrphanMode mode = OrphanMode::Strict);

std::vector<ItemRecord> load_items(const std::string& path);
ReviewParseResult load_reviews(const std::string& path, const std::set<std::string>& known_item_ids,
                               OrphanMode mode = OrphanMode::Strict);

nlohmann::json to_json(const ItemRecord& item);
nlohmann::json to_json(const ReviewRecord& review);
nlohmann::json skip_report_json(const std::vector<SkippedReview>& skipped);

void write_items(std::ostream& out, const std::vector<ItemRecord>& items);
void write_reviews(std::ostream& out, const std::vector<ReviewRecord>& reviews);

// "name: <name>; <field>: <value>; ..." with fields in lexicographic order.
std::string render_metadata_text(const ItemRecord& item);

// Metadata pseudo-document ids are "meta:<item_id>"; review documents reuse
// the review_id. Per item: the metadata doc first, then its reviews in input
// order.
std::vector<Document> build_documents(const std::vector<ItemRecord>& items,
                                      const std::vector<ReviewRecord>& reviews);

std::string metadata_doc_id(const std::string& item_id);

// Read-only lookup over the item records, shared by the responder and service.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<ItemRecord> items);

  const std::vector<ItemRecord>& items() const { return items_; }
  const ItemRecord* find(const std::string& item_id) const;
  const ItemRecord& at(const std::string& item_id) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace rarec
