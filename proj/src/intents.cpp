#include "rarec/intents.hpp"

#include <bit>
#include <cctype>
#include <future>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

constexpr std::string_view kReprompt = "\n\nReply with exactly one word: YES or NO.";

bool is_markup(unsigned char c) { return std::isspace(c) != 0 || std::ispunct(c) != 0; }

bool classify_one(const LlmBackend& llm, const PromptLibrary& prompts, Intent intent,
                  const std::string& utterance, const std::string& history_text) {
  const std::string prompt = classification_prompt(prompts, intent, utterance, history_text);
  std::string raw = llm.complete(LlmRequest::from_prompt(prompt));
  try {
    return parse_binary_answer(raw) == BinaryAnswer::Yes;
  } catch (const ValidationError&) {
  }
  raw = llm.complete(LlmRequest::from_prompt(prompt + std::string(kReprompt)));
  try {
    return parse_binary_answer(raw) == BinaryAnswer::Yes;
  } catch (const ValidationError& e) {
    throw ClassificationError(intent, e.what());
  }
}

}  // namespace

std::string to_string(Intent intent) {
  switch (intent) {
    case Intent::ProvidePreference: return "ProvidePreference";
    case Intent::Inquire: return "Inquire";
    case Intent::RejectRecommendation: return "RejectRecommendation";
    case Intent::AcceptRecommendation: return "AcceptRecommendation";
  }
  return "?";
}

std::optional<Intent> intent_from_string(std::string_view name) {
  for (auto i : kAllIntents) {
    if (to_string(i) == name) return i;
  }
  return std::nullopt;
}

std::string intent_description(Intent intent) {
  switch (intent) {
    case Intent::ProvidePreference:
      return "Provide or refine a preference for the desired restaurant, including preferences implied by a question";
    case Intent::Inquire:
      return "Ask for more information about the recommended restaurant(s)";
    case Intent::RejectRecommendation:
      return "Reject a recommended restaurant, either explicitly or implicitly";
    case Intent::AcceptRecommendation:
      return "Accept a recommended restaurant, either explicitly or implicitly";
  }
  return "";
}

IntentSet::IntentSet(std::initializer_list<Intent> intents) {
  for (auto i : intents) insert(i);
}

IntentSet IntentSet::from_bits(unsigned bits) {
  IntentSet s;
  s.bits_ = bits & 0xfu;
  return s;
}

std::size_t IntentSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Intent> IntentSet::members() const {
  std::vector<Intent> out;
  for (auto i : kAllIntents) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::string> IntentSet::names() const {
  std::vector<std::string> out;
  for (auto i : members()) out.push_back(to_string(i));
  return out;
}

BinaryAnswer parse_binary_answer(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && is_markup(static_cast<unsigned char>(raw[i]))) ++i;
  std::size_t j = i;
  while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j])) != 0) ++j;
  const std::string token = to_lower(raw.substr(i, j - i));
  if (token == "yes") return BinaryAnswer::Yes;
  if (token == "no") return BinaryAnswer::No;
  throw ValidationError("expected YES or NO, got \"" + std::string(raw.substr(0, 60)) + "\"");
}

ClassificationError::ClassificationError(Intent intent, const std::string& detail)
    : LlmError("could not classify intent " + to_string(intent) + ": " + detail), intent_(intent) {}

std::string render_history(const std::vector<HistoryTurn>& history, std::size_t window) {
  if (history.empty() || window == 0) return "(no previous turns)";
  const std::size_t start = history.size() > window ? history.size() - window : 0;
  std::string out;
  for (std::size_t i = start; i < history.size(); ++i) {
    out += "User: " + history[i].user + "\n";
    out += "Assistant: " + history[i].assistant + "\n";
  }
  out.pop_back();
  return out;
}

std::string classification_prompt(const PromptLibrary& prompts, Intent intent, const std::string& utterance,
                                  const std::string& history_text) {
  return prompts.render("classify_intent", {{"intent_name", to_string(intent)},
                                            {"intent_description", intent_description(intent)},
                                            {"history", history_text},
                                            {"utterance", utterance}});
}

IntentSet classify(const LlmBackend& llm, const PromptLibrary& prompts, const std::string& utterance,
                   const std::vector<HistoryTurn>& history, const ClassifyOptions& options,
                   std::array<Intent, 4> intent_order) {
  if (trim(utterance).empty()) throw PreconditionError("cannot classify an empty utterance");
  const std::string history_text = render_history(history, options.history_window);

  IntentSet result;
  if (!options.concurrent) {
    for (auto intent : intent_order) {
      if (classify_one(llm, prompts, intent, utterance, history_text)) result.insert(intent);
    }
    return result;
  }
  std::array<std::future<bool>, 4> pending;
  for (std::size_t i = 0; i < intent_order.size(); ++i) {
    pending[i] = std::async(std::launch::async, classify_one, std::cref(llm), std::cref(prompts), intent_order[i],
                            std::cref(utterance), std::cref(history_text));
  }
  // Collect every future before rethrowing so no task outlives its arguments.
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      if (pending[i].get()) result.insert(intent_order[i]);
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

}  // namespace rarec
