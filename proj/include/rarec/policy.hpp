#pragma once

#include <optional>
#include <string>

#include "rarec/intents.hpp"
#include "rarec/state.hpp"

namespace rarec {

enum class ActionKind {
  Greeting,
  RequestInformation,
  RecommendAndExplain,
  Answer,
  RespondToRejection,
  RespondToAcceptance,
  Clarify,
};

struct SystemAction {
  ActionKind kind;
  // Set only for RequestInformation.
  std::string subkey;

  static SystemAction request_information(std::string subkey) { return {ActionKind::RequestInformation, std::move(subkey)}; }
  bool operator==(const SystemAction&) const = default;
};

std::string to_string(ActionKind kind);
// "RequestInformation(cuisine_type)" for requests, the bare kind otherwise.
std::string to_string(const SystemAction& action);
std::optional<ActionKind> action_kind_from_string(std::string_view name);

// Total and deterministic. Priority:
//   first turn                                    -> Greeting
//   accept without preference/inquiry             -> RespondToAcceptance
//   reject without preference/inquiry             -> RespondToRejection
//   a mandatory subkey is missing                 -> RequestInformation(first missing)
//   inquiry                                       -> Answer
//   no intents                                    -> Clarify
//   anything else (preferences, reject + prefs)   -> RecommendAndExplain
SystemAction select_action(const DialogueState& state, const StateSchema& schema, const IntentSet& intents,
                           bool is_first_turn);

}  // namespace rarec
