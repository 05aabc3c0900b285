#include <algorithm>
#include <atomic>

#include "doctest.h"
#include "rarec/error.hpp"
#include "rarec/intents.hpp"
#include "support/fake_llm.hpp"
#include "support/fixtures.hpp"

using namespace rarec;
using testing_support::FakeLlm;

namespace {

const PromptLibrary& library() {
  static const PromptLibrary lib = PromptLibrary::load_dir(testing_support::prompts_dir());
  return lib;
}

std::string intent_of(const std::string& prompt) {
  for (auto i : kAllIntents) {
    if (prompt.find("Intent: " + to_string(i) + "\n") != std::string::npos) return to_string(i);
  }
  return "?";
}

}  // namespace

TEST_CASE("binary answers") {
  CHECK(parse_binary_answer("YES") == BinaryAnswer::Yes);
  CHECK(parse_binary_answer("no, it does not.") == BinaryAnswer::No);
  CHECK(parse_binary_answer("  **Yes**") == BinaryAnswer::Yes);
  CHECK(parse_binary_answer("\"No\"") == BinaryAnswer::No);
  CHECK_THROWS_AS(parse_binary_answer("maybe"), ValidationError);
  CHECK_THROWS_AS(parse_binary_answer("yesterday"), ValidationError);
  CHECK_THROWS_AS(parse_binary_answer(""), ValidationError);
}

TEST_CASE("intent sets") {
  IntentSet s{Intent::Inquire, Intent::ProvidePreference};
  CHECK(s.size() == 2);
  CHECK(s.names() == std::vector<std::string>{"ProvidePreference", "Inquire"});
  CHECK(IntentSet::from_bits(0xff).size() == 4);
  CHECK(IntentSet::from_bits(0).empty());
  for (auto i : kAllIntents) CHECK(intent_from_string(to_string(i)) == i);
  CHECK_FALSE(intent_from_string("Dance").has_value());
}

TEST_CASE("history window") {
  std::vector<HistoryTurn> h;
  CHECK(render_history(h, 4) == "(no previous turns)");
  for (int i = 1; i <= 6; ++i) h.push_back({"u" + std::to_string(i), "a" + std::to_string(i)});
  CHECK(render_history(h, 2) == "User: u5\nAssistant: a5\nUser: u6\nAssistant: a6");
  CHECK(render_history(h, 10).find("User: u1") == 0);
  CHECK(render_history(h, 0) == "(no previous turns)");
}

TEST_CASE("one binary prompt per intent; result independent of order and concurrency") {
  FakeLlm llm([](const std::string& p) {
    const auto intent = intent_of(p);
    return intent == "Inquire" || intent == "ProvidePreference" ? "Yes." : "No";
  });
  std::vector<HistoryTurn> history{{"hi", "hello"}};
  auto want = IntentSet{Intent::Inquire, Intent::ProvidePreference};
  std::array<Intent, 4> order = kAllIntents;
  std::sort(order.begin(), order.end());
  do {
    for (bool concurrent : {false, true}) {
      CHECK(classify(llm, library(), "Does Washoku Bistro have parking?", history, {4, concurrent}, order) == want);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  auto prompts = llm.prompts();
  CHECK(prompts.size() == 24 * 2 * 4);
  CHECK(prompts[0].find("User: hi\nAssistant: hello") != std::string::npos);
  CHECK(prompts[0].find("User utterance: Does Washoku Bistro have parking?") != std::string::npos);
}

TEST_CASE("unparseable answers get one reprompt") {
  std::atomic<int> calls{0};
  FakeLlm llm([&](const std::string& p) -> std::string {
    ++calls;
    if (p.find("Reply with exactly one word") != std::string::npos) return "NO";
    return "I think so?";
  });
  CHECK(classify(llm, library(), "hello", {}, {4, false}).empty());
  CHECK(calls == 8);

  FakeLlm stubborn([](const std::string& p) { return intent_of(p) == "Inquire" ? "perhaps" : "no"; });
  try {
    classify(stubborn, library(), "hello", {}, {4, true});
    FAIL("expected ClassificationError");
  } catch (const ClassificationError& e) {
    CHECK(e.intent() == Intent::Inquire);
  }
  CHECK_THROWS_AS(classify(stubborn, library(), "   ", {}), PreconditionError);
}

TEST_CASE("transport failures propagate") {
  FakeLlm broken([](const std::string&) -> std::string { throw TransportError("down"); });
  CHECK_THROWS_AS(classify(broken, library(), "hello", {}), TransportError);
}

TEST_CASE("shipped script reproduces the example utterances") {
  ScriptedBackend llm(load_script(testing_support::sample_dir() / "script.json"));
  using I = Intent;
  const std::vector<std::pair<std::string, IntentSet>> cases{
      {"I want a place with a very good scenic view.", {I::ProvidePreference}},
      {"What kind of menu do they offer?", {I::Inquire}},
      {"How do these options compare for price?", {I::Inquire}},
      {"Probably too expensive, what else is there?", {I::RejectRecommendation, I::ProvidePreference}},
      {"The first place looks good!", {I::AcceptRecommendation}},
      {"Does Washoku Bistro have parking?", {I::Inquire, I::ProvidePreference}},
      {"Something completely unrelated", {}},
  };
  for (const auto& [utterance, want] : cases) {
    CAPTURE(utterance);
    CHECK(classify(llm, library(), utterance, {}) == want);
  }
}
