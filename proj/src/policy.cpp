#include "rarec/policy.hpp"

namespace rarec {

std::string to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Greeting: return "Greeting";
    case ActionKind::RequestInformation: return "RequestInformation";
    case ActionKind::RecommendAndExplain: return "RecommendAndExplain";
    case ActionKind::Answer: return "Answer";
    case ActionKind::RespondToRejection: return "RespondToRejection";
    case ActionKind::RespondToAcceptance: return "RespondToAcceptance";
    case ActionKind::Clarify: return "Clarify";
  }
  return "?";
}

std::string to_string(const SystemAction& action) {
  if (action.kind == ActionKind::RequestInformation) return "RequestInformation(" + action.subkey + ")";
  return to_string(action.kind);
}

std::optional<ActionKind> action_kind_from_string(std::string_view name) {
  for (auto k : {ActionKind::Greeting, ActionKind::RequestInformation, ActionKind::RecommendAndExplain,
                 ActionKind::Answer, ActionKind::RespondToRejection, ActionKind::RespondToAcceptance,
                 ActionKind::Clarify}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

SystemAction select_action(const DialogueState& state, const StateSchema& schema, const IntentSet& intents,
                           bool is_first_turn) {
  if (is_first_turn) return {ActionKind::Greeting, {}};

  const bool engaged = intents.contains(Intent::ProvidePreference) || intents.contains(Intent::Inquire);
  if (intents.contains(Intent::AcceptRecommendation) && !engaged) return {ActionKind::RespondToAcceptance, {}};
  if (intents.contains(Intent::RejectRecommendation) && !engaged) return {ActionKind::RespondToRejection, {}};

  if (auto missing = missing_mandatory(state, schema); !missing.empty()) {
    return SystemAction::request_information(missing.front());
  }
  if (intents.contains(Intent::Inquire)) return {ActionKind::Answer, {}};
  if (intents.empty()) return {ActionKind::Clarify, {}};
  return {ActionKind::RecommendAndExplain, {}};
}

}  // namespace rarec
