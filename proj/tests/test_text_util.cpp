#include "doctest.h"
#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

using namespace rarec;

TEST_CASE("trim and case helpers") {
  CHECK(trim("  a b \n\t") == "a b");
  CHECK(trim("   ").empty());
  CHECK(to_lower("Washoku BISTRO") == "washoku bistro");
  CHECK(contains_ci("Does WASHOKU bistro have parking?", "Washoku Bistro"));
  CHECK_FALSE(contains_ci("Tokyo", "Tokyo Express"));
}

TEST_CASE("fenced JSON extraction") {
  CHECK(extract_fenced_json("Sure!\n```json\n{\"a\": 1}\n```\ntrailing")["a"] == 1);
  CHECK(extract_fenced_json("```\n[1, 2]\n```").size() == 2);
  CHECK(extract_fenced_json("  {\"source\": \"reviews\"} ")["source"] == "reviews");
  // Only the first fence counts.
  CHECK(extract_fenced_json("```json\n{\"x\": 1}\n```\n```json\n{\"x\": 2}\n```")["x"] == 1);
  CHECK_THROWS_AS(extract_fenced_json("no json here"), ValidationError);
  CHECK_THROWS_AS(extract_fenced_json("```json\n{broken\n```"), ValidationError);
}

TEST_CASE("scalar rendering") {
  CHECK(scalar_to_text(nlohmann::json("Downtown")) == "Downtown");
  CHECK(scalar_to_text(nlohmann::json(true)) == "true");
  CHECK(scalar_to_text(nlohmann::json(false)) == "false");
  CHECK(scalar_to_text(nlohmann::json(3)) == "3");
  CHECK(scalar_to_text(nlohmann::json(nullptr)) == "null");
}
