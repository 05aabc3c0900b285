#include "rarec/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

using nlohmann::json;

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

// Calls fn(line_number, parsed_object) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) throw ValidationError("malformed JSON" + at_line(line_no));
    if (!parsed.is_object()) throw ValidationError("expected a JSON object" + at_line(line_no));
    fn(line_no, parsed);
  }
}

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw ValidationError(std::string("missing ") + key + at_line(line_no));
  }
  if (!it->is_string()) throw ValidationError(std::string(key) + " must be a string" + at_line(line_no));
  auto value = it->get<std::string>();
  if (trim(value).empty()) throw ValidationError(std::string("empty ") + key + at_line(line_no));
  return value;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

}  // namespace

std::string to_string(DocKind kind) { return kind == DocKind::Review ? "review" : "metadata"; }

DocKind doc_kind_from_string(const std::string& s) {
  if (s == "review") return DocKind::Review;
  if (s == "metadata") return DocKind::MetadataDoc;
  throw ValidationError("unknown document kind '" + s + "'");
}

std::vector<ItemRecord> parse_items(std::istream& in) {
  std::vector<ItemRecord> items;
  std::unordered_set<std::string> seen;
  for_each_json_line(in, [&](std::size_t line_no, const json& obj) {
    ItemRecord item;
    item.item_id = required_string(obj, "item_id", line_no);
    item.name = required_string(obj, "name", line_no);
    if (!seen.insert(item.item_id).second) {
      throw ValidationError("duplicate item_id '" + item.item_id + "'" + at_line(line_no));
    }
    if (auto it = obj.find("metadata"); it != obj.end() && !it->is_null()) {
      if (!it->is_object()) throw ValidationError("metadata must be an object" + at_line(line_no));
      for (const auto& [field, value] : it->items()) {
        if (field.empty()) throw ValidationError("empty metadata field name" + at_line(line_no));
        if (value.is_object() || value.is_array()) {
          throw ValidationError("metadata field '" + field + "' is not a scalar" + at_line(line_no));
        }
        item.metadata.emplace(field, value);
      }
    }
    items.push_back(std::move(item));
  });
  return items;
}

ReviewParseResult parse_reviews(std::istream& in, const std::set<std::string>& known_item_ids,
                                OrphanMode mode) {
  ReviewParseResult result;
  std::unordered_set<std::string> seen;
  for_each_json_line(in, [&](std::size_t line_no, const json& obj) {
    ReviewRecord review;
    review.review_id = required_string(obj, "review_id", line_no);
    review.item_id = required_string(obj, "item_id", line_no);
    review.text = required_string(obj, "text", line_no);
    if (!seen.insert(review.review_id).second) {
      throw ValidationError("duplicate review_id '" + review.review_id + "'" + at_line(line_no));
    }
    if (!known_item_ids.contains(review.item_id)) {
      if (mode == OrphanMode::Strict) {
        throw ValidationError("review '" + review.review_id + "' references unknown item_id '" +
                              review.item_id + "'" + at_line(line_no));
      }
      result.skipped.push_back({review.review_id, review.item_id, "unknown item_id"});
      return;
    }
    result.reviews.push_back(std::move(review));
  });
  return result;
}

std::vector<ItemRecord> load_items(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_items(in);
}

ReviewParseResult load_reviews(const std::string& path, const std::set<std::string>& known_item_ids,
                               OrphanMode mode) {
  auto in = open_or_throw(path);
  return parse_reviews(in, known_item_ids, mode);
}

nlohmann::json to_json(const ItemRecord& item) {
  json metadata = json::object();
  for (const auto& [field, value] : item.metadata) metadata[field] = value;
  return json{{"item_id", item.item_id}, {"name", item.name}, {"metadata", metadata}};
}

nlohmann::json to_json(const ReviewRecord& review) {
  return json{{"review_id", review.review_id}, {"item_id", review.item_id}, {"text", review.text}};
}

nlohmann::json skip_report_json(const std::vector<SkippedReview>& skipped) {
  json report = json::array();
  for (const auto& s : skipped) {
    report.push_back({{"review_id", s.review_id}, {"item_id", s.item_id}, {"reason", s.reason}});
  }
  return report;
}

void write_items(std::ostream& out, const std::vector<ItemRecord>& items) {
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

void write_reviews(std::ostream& out, const std::vector<ReviewRecord>& reviews) {
  for (const auto& review : reviews) out << to_json(review).dump() << '\n';
}

std::string render_metadata_text(const ItemRecord& item) {
  std::string text = "name: " + item.name;
  // MetadataMap is a std::map, so iteration is already lexicographic.
  for (const auto& [field, value] : item.metadata) {
    text += "; " + field + ": " + scalar_to_text(value);
  }
  return text;
}

std::string metadata_doc_id(const std::string& item_id) { return "meta:" + item_id; }

std::vector<Document> build_documents(const std::vector<ItemRecord>& items,
                                      const std::vector<ReviewRecord>& reviews) {
  std::unordered_map<std::string, std::vector<const ReviewRecord*>> by_item;
  for (const auto& review : reviews) by_item[review.item_id].push_back(&review);

  std::vector<Document> docs;
  docs.reserve(items.size() + reviews.size());
  std::unordered_set<std::string> ids;
  auto push = [&](Document doc) {
    if (!ids.insert(doc.doc_id).second) {
      throw ValidationError("document id collision on '" + doc.doc_id + "'");
    }
    docs.push_back(std::move(doc));
  };
  std::size_t placed = 0;
  for (const auto& item : items) {
    push({metadata_doc_id(item.item_id), item.item_id, DocKind::MetadataDoc, render_metadata_text(item)});
    if (auto it = by_item.find(item.item_id); it != by_item.end()) {
      for (const auto* review : it->second) {
        push({review->review_id, review->item_id, DocKind::Review, review->text});
        ++placed;
      }
    }
  }
  if (placed != reviews.size()) {
    throw PreconditionError("reviews reference items outside the given item list");
  }
  return docs;
}

Catalog::Catalog(std::vector<ItemRecord> items) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) by_id_.emplace(items_[i].item_id, i);
}

const ItemRecord* Catalog::find(const std::string& item_id) const {
  auto it = by_id_.find(item_id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

const ItemRecord& Catalog::at(const std::string& item_id) const {
  const auto* item = find(item_id);
  if (item == nullptr) throw NotFoundError("unknown item_id '" + item_id + "'");
  return *item;
}

}  // namespace rarec
