#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rarec {

// Constraint subkeys of the dialogue state. "others" must always be present;
// mandatory subkeys are the ones the system asks for before recommending.
struct StateSchema {
  std::vector<std::string> constraint_subkeys;
  std::vector<std::string> mandatory_subkeys;

  static StateSchema restaurant_default();

  // Throws ValidationError on a malformed schema.
  void validate() const;
  bool has_subkey(std::string_view subkey) const;
};

using ConstraintMap = std::map<std::string, std::vector<std::string>>;

struct DialogueState {
  ConstraintMap hard_constraints;
  ConstraintMap soft_constraints;
  std::vector<std::string> recommended_items;
  std::vector<std::string> rejected_items;
  std::vector<std::string> accepted_items;

  bool operator==(const DialogueState&) const = default;
};

// A proposed change to the constraints, typically parsed from the
// update-constraints prompt's JSON answer. A value written "remove: <v>"
// deletes <v> from that subkey instead of adding it.
struct ConstraintProposal {
  ConstraintMap hard;
  ConstraintMap soft;

  // Accepts {"hard": {subkey: [strings] | string}, "soft": {...}}; either map
  // may be omitted.
  static ConstraintProposal from_json(const nlohmann::json& j);
};

enum class Verdict { Accept, Reject };

DialogueState new_state(const StateSchema& schema);

DialogueState apply_constraint_update(const DialogueState& state, const StateSchema& schema,
                                      const ConstraintProposal& proposal);
DialogueState record_recommendation(const DialogueState& state, std::span<const std::string> item_ids);
DialogueState record_verdict(const DialogueState& state, const std::string& item_id, Verdict verdict);

// Mandatory subkeys with no hard-constraint value, in schema order.
std::vector<std::string> missing_mandatory(const DialogueState& state, const StateSchema& schema);

// Throws ValidationError naming the first broken invariant.
void validate(const DialogueState& state, const StateSchema& schema);

// Top-level keys in fixed order: hard_constraints, soft_constraints,
// recommended_items, rejected_items, accepted_items. Empty subkeys omitted.
nlohmann::ordered_json to_json(const DialogueState& state);
std::string serialize(const DialogueState& state);

DialogueState state_from_json(const StateSchema& schema, const nlohmann::json& j);
DialogueState deserialize(const StateSchema& schema, std::string_view text);

}  // namespace rarec
