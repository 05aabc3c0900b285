#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using nlohmann::json;
using testing_support::read_file;
using testing_support::sample_dir;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "rarec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = rarec::cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

Outcome ingest_sample(const std::filesystem::path& out) {
  return run_cli({"ingest", "--items", (sample_dir() / "items.jsonl").string(), "--reviews",
                  (sample_dir() / "reviews.jsonl").string(), "--out", out.string()});
}

Outcome build(const std::filesystem::path& corpus, const std::filesystem::path& out) {
  return run_cli({"index", "build", "--corpus", corpus.string(), "--out", out.string(), "--timestamp",
                  "2024-01-01T00:00:00Z"});
}

}  // namespace

TEST_CASE("ingest normalizes the sample corpus") {
  TempDir tmp;
  auto r = ingest_sample(tmp.path() / "corpus");
  CHECK(r.code == rarec::cli::kExitOk);
  CHECK(r.out == "12 items, 60 reviews, 0 skipped\n");
  CHECK(r.err.empty());
  CHECK(std::filesystem::exists(tmp.path() / "corpus" / "items.jsonl"));
  CHECK(json::parse(read_file(tmp.path() / "corpus" / "skips.json")).empty());
}

TEST_CASE("ingest: orphan reviews fail strictly and are skipped leniently") {
  TempDir tmp;
  write_file(tmp.path() / "items.jsonl", R"({"item_id": "a", "name": "A Place", "metadata": {"city": "X"}})"
                                         "\n");
  write_file(tmp.path() / "reviews.jsonl",
             R"({"review_id": "r1", "item_id": "a", "text": "good food"})"
             "\n"
             R"({"review_id": "r2", "item_id": "ghost", "text": "who?"})"
             "\n");
  const std::vector<std::string> base{"ingest", "--items", (tmp.path() / "items.jsonl").string(), "--reviews",
                                      (tmp.path() / "reviews.jsonl").string(), "--out",
                                      (tmp.path() / "out").string()};
  auto strict = run_cli(base);
  CHECK(strict.code == rarec::cli::kExitFailure);
  CHECK(strict.err.find("r2") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(tmp.path() / "out" / "reviews.jsonl"));

  auto args = base;
  args.push_back("--lenient");
  auto lenient = run_cli(args);
  CHECK(lenient.code == rarec::cli::kExitOk);
  CHECK(lenient.out.rfind("1 items, 1 reviews, 1 skipped\nskipped r2: ", 0) == 0);
  auto skips = json::parse(read_file(tmp.path() / "out" / "skips.json"));
  REQUIRE(skips.size() == 1);
}

TEST_CASE("index build is reproducible byte for byte") {
  TempDir tmp;
  REQUIRE(ingest_sample(tmp.path() / "corpus").code == 0);
  auto first = build(tmp.path() / "corpus", tmp.path() / "a");
  CHECK(first.code == 0);
  CHECK(first.out.rfind("indexed 72 documents (12 items, 60 reviews), dim 64", 0) == 0);
  auto manifest = json::parse(read_file(tmp.path() / "a" / "manifest.json"));
  CHECK(manifest["doc_count"] == 72);
  CHECK(manifest["build_timestamp"] == "2024-01-01T00:00:00Z");
  REQUIRE(build(tmp.path() / "corpus", tmp.path() / "b").code == 0);
  for (const auto* name : {"manifest.json", "vectors.bin", "docs.jsonl", "items.jsonl"}) {
    CAPTURE(name);
    const auto a = read_file(tmp.path() / "a" / name);
    CHECK_FALSE(a.empty());
    CHECK(a == read_file(tmp.path() / "b" / name));
  }
  CHECK(std::filesystem::file_size(tmp.path() / "a" / "vectors.bin") == 72 * 64 * 4);

  auto partitioned = run_cli({"index", "build", "--corpus", (tmp.path() / "corpus").string(), "--out",
                              (tmp.path() / "p").string(), "--partitions", "4"});
  CHECK(partitioned.code == 0);
  CHECK(std::filesystem::exists(tmp.path() / "p" / "partitions.json"));
}

TEST_CASE("command failures and usage errors") {
  TempDir tmp;
  auto missing = build(tmp.path() / "nope", tmp.path() / "out");
  CHECK(missing.code == rarec::cli::kExitFailure);
  CHECK(missing.err.rfind("error: ", 0) == 0);

  CHECK(run_cli({}).code == rarec::cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == rarec::cli::kExitUsage);
  auto no_out = run_cli({"ingest", "--items", "x"});
  CHECK(no_out.code == rarec::cli::kExitUsage);
  CHECK(no_out.err.rfind("usage error: ", 0) == 0);
  CHECK(run_cli({"index", "build", "--corpus", "c", "--out", "o", "--encoder", "magic"}).code ==
        rarec::cli::kExitUsage);
  CHECK(run_cli({"index", "build", "--corpus", "c", "--out", "o", "--dim", "many"}).code == rarec::cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == rarec::cli::kExitOk);
  CHECK(run_cli({"chat", "--config", (tmp.path() / "missing.json").string()}).code == rarec::cli::kExitFailure);
}

TEST_CASE("chat runs a conversation and shows the state") {
  TempDir tmp;
  const auto config = testing_support::write_sample_service(tmp.path());
  auto r = run_cli({"chat", "--config", config.string()},
                   "Can you help me find somewhere to eat in downtown Edmonton?\n\n/state\n");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("assistant> Hello there! I am an Edmonton restaurant recommender.", 0) == 0);
  CHECK(r.out.find("assistant> What kind of cuisine") != std::string::npos);
  const auto brace = r.out.find("{\n");
  REQUIRE(brace != std::string::npos);
  const auto end = r.out.find("\n}\n", brace);
  REQUIRE(end != std::string::npos);
  auto state = json::parse(r.out.substr(brace, end + 2 - brace));
  CHECK(state["hard_constraints"]["location"] == json{"downtown Edmonton"});

  auto quit = run_cli({"chat", "--config", config.string()}, "/quit\nJapanese, something like sushi\n");
  CHECK(quit.code == 0);
  CHECK(quit.out.find("How about") == std::string::npos);
}

TEST_CASE("chat keeps going after a failed turn") {
  TempDir tmp;
  write_file(tmp.path() / "script.json", R"([{"pattern": "*", "response": "Hello from the script.", "priority": 0},
    {"pattern": "*Does the utterance express*", "response": "maybe", "priority": 5}])");
  const auto config =
      testing_support::write_sample_service(tmp.path(), {{"backend", "scripted"}, {"script_file", "script.json"}});
  auto r = run_cli({"chat", "--config", config.string()}, "hello\n/state\n");
  CHECK(r.code == 0);
  CHECK(r.err.find("turn failed: ") != std::string::npos);
  CHECK(r.out.find("\"hard_constraints\": {}") != std::string::npos);
  CHECK(r.out.find("\"location\"") == std::string::npos);
}

TEST_CASE("eval replays the sample fixture") {
  TempDir tmp;
  const auto config = testing_support::write_sample_service(tmp.path());
  auto r = run_cli({"eval", "--config", config.string(), "--script", (sample_dir() / "eval_fixture.json").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "greeting: PASS\nturn 1: PASS\nturn 2: PASS\nturn 3: PASS\nturn 4: PASS\nturn 5: PASS\n"
                 "6/6 checks passed\n");

  write_file(tmp.path() / "wrong.json", R"([
    {"utterance": "Can you help me find somewhere to eat in downtown Edmonton?",
     "expect": {"action": "Clarify", "intents": ["Inquire"], "response_contains": "cuisine"}},
    {"utterance": "Japanese, something like sushi", "expect": {"action": "RecommendAndExplain",
     "state_contains": {"recommended_items": ["la_piazza"]}}}])");
  auto wrong = run_cli({"eval", "--config", config.string(), "--script", (tmp.path() / "wrong.json").string()});
  CHECK(wrong.code == rarec::cli::kExitFailure);
  CHECK(wrong.out.find("turn 1: FAIL\n  intents: expected [\"Inquire\"], got [\"ProvidePreference\"]\n"
                       "  action: expected Clarify, got RequestInformation(cuisine_type)\n") != std::string::npos);
  CHECK(wrong.out.find("turn 2: FAIL\n  state: recommended_items") != std::string::npos);
  CHECK(wrong.out.find("0/2 checks passed") != std::string::npos);

  write_file(tmp.path() / "empty.json", R"({"turns": []})");
  auto empty = run_cli({"eval", "--config", config.string(), "--script", (tmp.path() / "empty.json").string()});
  CHECK(empty.code == rarec::cli::kExitFailure);
  CHECK(empty.err.find("no turns") != std::string::npos);
  write_file(tmp.path() / "bad.json", R"([{"expect": {}}])");
  CHECK(run_cli({"eval", "--config", config.string(), "--script", (tmp.path() / "bad.json").string()}).code ==
        rarec::cli::kExitFailure);
}
