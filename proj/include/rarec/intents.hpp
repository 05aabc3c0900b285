#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rarec/error.hpp"
#include "rarec/llm.hpp"
#include "rarec/prompts.hpp"

namespace rarec {

enum class Intent : std::uint8_t { ProvidePreference, Inquire, RejectRecommendation, AcceptRecommendation };

inline constexpr std::array<Intent, 4> kAllIntents{Intent::ProvidePreference, Intent::Inquire,
                                                   Intent::RejectRecommendation, Intent::AcceptRecommendation};

std::string to_string(Intent intent);
std::optional<Intent> intent_from_string(std::string_view name);
// Natural-language description handed to the classification prompt.
std::string intent_description(Intent intent);

// Multi-label set over the four intents.
class IntentSet {
 public:
  IntentSet() = default;
  IntentSet(std::initializer_list<Intent> intents);
  static IntentSet from_bits(unsigned bits);

  void insert(Intent intent) { bits_ |= bit(intent); }
  bool contains(Intent intent) const { return (bits_ & bit(intent)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  unsigned bits() const { return bits_; }
  // Canonical order (declaration order of Intent).
  std::vector<Intent> members() const;
  std::vector<std::string> names() const;

  bool operator==(const IntentSet&) const = default;

 private:
  static unsigned bit(Intent intent) { return 1u << static_cast<unsigned>(intent); }
  unsigned bits_ = 0;
};

enum class BinaryAnswer { Yes, No };

// Case-insensitive leading YES/NO after stripping whitespace, punctuation and
// markup characters. Throws ValidationError otherwise.
BinaryAnswer parse_binary_answer(std::string_view raw);

struct HistoryTurn {
  std::string user;
  std::string assistant;
};

// Raised when an intent's answer stays unparseable after the reprompt.
class ClassificationError : public LlmError {
 public:
  ClassificationError(Intent intent, const std::string& detail);
  Intent intent() const { return intent_; }

 private:
  Intent intent_;
};

struct ClassifyOptions {
  std::size_t history_window = 4;
  bool concurrent = true;
};

std::string render_history(const std::vector<HistoryTurn>& history, std::size_t window);

// One binary prompt per intent; an intent is included iff its answer parses
// affirmative. `intent_order` only changes the order in which prompts are
// issued.
IntentSet classify(const LlmBackend& llm, const PromptLibrary& prompts, const std::string& utterance,
                   const std::vector<HistoryTurn>& history, const ClassifyOptions& options = {},
                   std::array<Intent, 4> intent_order = kAllIntents);

// The prompt text sent for one intent (exposed for fixtures and tests).
std::string classification_prompt(const PromptLibrary& prompts, Intent intent, const std::string& utterance,
                                  const std::string& history_text);

}  // namespace rarec
