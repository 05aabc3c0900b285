#include <sstream>

#include "doctest.h"
#include "rarec/corpus.hpp"
#include "rarec/error.hpp"
#include "support/fixtures.hpp"

using namespace rarec;

namespace {

std::vector<ItemRecord> items_from(const std::string& text) {
  std::istringstream in(text);
  return parse_items(in);
}

ReviewParseResult reviews_from(const std::string& text, std::set<std::string> known,
                               OrphanMode mode = OrphanMode::Strict) {
  std::istringstream in(text);
  return parse_reviews(in, known, mode);
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("items parse with scalar metadata") {
  auto items = items_from(
      "{\"item_id\":\"a\",\"name\":\"A\",\"metadata\":{\"parking\":true,\"price\":\"$\",\"rating\":4.5,\"x\":null}}\n"
      "\n"
      "{\"item_id\":\"b\",\"name\":\"B\"}\r\n");
  REQUIRE(items.size() == 2);
  CHECK(items[0].metadata.at("parking") == true);
  CHECK(items[0].metadata.at("x").is_null());
  CHECK(items[1].metadata.empty());
}

TEST_CASE("item validation names the line") {
  CHECK(error_of([] { items_from("{\"item_id\":\"a\",\"name\":\"A\"}\n{\"item_id\":\"a\",\"name\":\"B\"}\n"); })
            .find("duplicate item_id 'a' at line 2") != std::string::npos);
  CHECK(error_of([] { items_from("{\"name\":\"A\"}\n"); }).find("missing item_id at line 1") != std::string::npos);
  CHECK(error_of([] { items_from("{\"item_id\":\"a\",\"name\":\"  \"}\n"); }).find("empty name") != std::string::npos);
  CHECK(error_of([] { items_from("{\"item_id\":\"a\",\"name\":\"A\",\"metadata\":{\"m\":[1]}}\n"); })
            .find("not a scalar") != std::string::npos);
  CHECK(error_of([] { items_from("{\"item_id\":\"a\",\n"); }).find("malformed JSON at line 1") != std::string::npos);
  CHECK(error_of([] { items_from("[1]\n"); }).find("expected a JSON object") != std::string::npos);
}

TEST_CASE("orphan reviews: strict fails naming the review, lenient skips") {
  const std::string text =
      "{\"review_id\":\"r1\",\"item_id\":\"a\",\"text\":\"good\"}\n"
      "{\"review_id\":\"r2\",\"item_id\":\"ghost\",\"text\":\"who?\"}\n";
  const auto msg = error_of([&] { reviews_from(text, {"a"}); });
  CHECK(msg.find("r2") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);

  auto lenient = reviews_from(text, {"a"}, OrphanMode::Lenient);
  CHECK(lenient.reviews.size() == 1);
  REQUIRE(lenient.skipped.size() == 1);
  CHECK(lenient.skipped[0].review_id == "r2");
  CHECK(skip_report_json(lenient.skipped)[0]["item_id"] == "ghost");
}

TEST_CASE("review validation") {
  CHECK_THROWS_AS(reviews_from("{\"review_id\":\"r1\",\"item_id\":\"a\",\"text\":\"\"}\n", {"a"}), ValidationError);
  CHECK_THROWS_AS(reviews_from("{\"review_id\":\"r1\",\"item_id\":\"a\",\"text\":5}\n", {"a"}), ValidationError);
  CHECK_THROWS_AS(reviews_from("{\"review_id\":\"r1\",\"item_id\":\"a\",\"text\":\"x\"}\n"
                               "{\"review_id\":\"r1\",\"item_id\":\"a\",\"text\":\"y\"}\n",
                               {"a"}),
                  ValidationError);
}

TEST_CASE("metadata text is lexicographic and documents are ordered per item") {
  ItemRecord item{"tokyo_express", "Tokyo Express", {{"parking", true}, {"cuisine", "Japanese"}, {"outdoor", nullptr}}};
  CHECK(render_metadata_text(item) == "name: Tokyo Express; cuisine: Japanese; outdoor: null; parking: true");

  std::vector<ItemRecord> items{{"b", "B", {}}, {"a", "A", {}}};
  std::vector<ReviewRecord> reviews{{"r1", "a", "one"}, {"r2", "b", "two"}, {"r3", "a", "three"}};
  auto docs = build_documents(items, reviews);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.doc_id);
  CHECK(ids == std::vector<std::string>{"meta:b", "r2", "meta:a", "r1", "r3"});
  CHECK(docs[0].kind == DocKind::MetadataDoc);
  CHECK(docs[0].text == "name: B");
}

TEST_CASE("document id collisions and stray reviews are rejected") {
  std::vector<ItemRecord> items{{"a", "A", {}}};
  CHECK_THROWS_AS(build_documents(items, {{"meta:a", "a", "clash"}}), ValidationError);
  CHECK_THROWS_AS(build_documents(items, {{"r1", "zzz", "stray"}}), PreconditionError);
}

TEST_CASE("round trip through the JSONL writers") {
  auto items = testing_support::sample_items();
  std::ostringstream out;
  write_items(out, items);
  CHECK(items_from(out.str()) == items);
}

TEST_CASE("sample corpus counts") {
  auto items = testing_support::sample_items();
  auto reviews = testing_support::sample_reviews();
  CHECK(items.size() == 12);
  CHECK(reviews.size() == 60);
  CHECK(build_documents(items, reviews).size() == items.size() + reviews.size());
}

TEST_CASE("catalog lookup") {
  Catalog catalog(testing_support::sample_items());
  CHECK(catalog.size() == 12);
  CHECK(catalog.at("washoku_bistro").name == "Washoku Bistro");
  CHECK(catalog.find("nope") == nullptr);
  CHECK_THROWS_AS(catalog.at("nope"), NotFoundError);
}
