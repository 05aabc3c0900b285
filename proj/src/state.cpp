#include "rarec/state.hpp"

#include <algorithm>
#include <set>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

constexpr std::string_view kOthers = "others";
constexpr std::string_view kRemovePrefix = "remove:";

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void merge_into(ConstraintMap& target, const std::string& subkey, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) return;
  if (v.size() >= kRemovePrefix.size() && to_lower(v.substr(0, kRemovePrefix.size())) == kRemovePrefix) {
    const std::string victim = trim(std::string_view(v).substr(kRemovePrefix.size()));
    auto it = target.find(subkey);
    if (it == target.end()) return;
    auto& values = it->second;
    std::erase_if(values, [&](const std::string& existing) { return to_lower(existing) == to_lower(victim); });
    if (values.empty()) target.erase(it);
    return;
  }
  auto& values = target[subkey];
  if (!contains(values, v)) values.push_back(v);
}

void apply_map(ConstraintMap& target, const ConstraintMap& proposed, const StateSchema& schema) {
  for (const auto& [subkey, values] : proposed) {
    const bool known = schema.has_subkey(subkey);
    for (const auto& value : values) {
      if (known) {
        merge_into(target, subkey, value);
        continue;
      }
      // Unknown subkeys land in "others" as "<subkey>: <value>"; removals keep
      // their prefix in front of the folded text.
      std::string v = trim(value);
      if (v.size() >= kRemovePrefix.size() && to_lower(v.substr(0, kRemovePrefix.size())) == kRemovePrefix) {
        merge_into(target, std::string(kOthers),
                   std::string(kRemovePrefix) + " " + subkey + ": " + trim(std::string_view(v).substr(kRemovePrefix.size())));
      } else {
        merge_into(target, std::string(kOthers), subkey + ": " + v);
      }
    }
  }
}

ConstraintMap proposal_map(const nlohmann::json& j, const char* which) {
  ConstraintMap out;
  auto it = j.find(which);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_object()) throw ValidationError(std::string("proposal '") + which + "' must be an object");
  for (const auto& [subkey, value] : it->items()) {
    if (subkey.empty()) throw ValidationError("proposal contains an empty subkey");
    auto& values = out[subkey];
    if (value.is_string()) {
      values.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      for (const auto& v : value) {
        if (!v.is_string()) throw ValidationError("proposal value under '" + subkey + "' is not a string");
        values.push_back(v.get<std::string>());
      }
    } else if (!value.is_null()) {
      throw ValidationError("proposal value under '" + subkey + "' is not a string list");
    }
  }
  return out;
}

void validate_constraints(const ConstraintMap& map, const StateSchema& schema, const char* which) {
  for (const auto& [subkey, values] : map) {
    if (!schema.has_subkey(subkey)) {
      throw ValidationError(std::string(which) + " has unknown subkey '" + subkey + "'");
    }
    if (values.empty()) throw ValidationError(std::string(which) + "." + subkey + " is empty");
    std::set<std::string> seen;
    for (const auto& v : values) {
      if (trim(v).empty()) throw ValidationError(std::string(which) + "." + subkey + " has an empty value");
      if (!seen.insert(v).second) {
        throw ValidationError(std::string(which) + "." + subkey + " repeats '" + v + "'");
      }
    }
  }
}

ConstraintMap constraints_from_json(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("state is missing '") + key + "'");
  if (!it->is_object()) throw ValidationError(std::string("'") + key + "' must be an object");
  ConstraintMap out;
  for (const auto& [subkey, values] : it->items()) {
    if (!values.is_array()) throw ValidationError(std::string(key) + "." + subkey + " must be a list");
    auto& list = out[subkey];
    for (const auto& v : values) {
      if (!v.is_string()) throw ValidationError(std::string(key) + "." + subkey + " holds a non-string");
      list.push_back(v.get<std::string>());
    }
    if (list.empty()) out.erase(subkey);
  }
  return out;
}

std::vector<std::string> items_from_json(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("state is missing '") + key + "'");
  if (!it->is_array()) throw ValidationError(std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ValidationError(std::string("'") + key + "' holds a non-string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

StateSchema StateSchema::restaurant_default() {
  return {{"location", "cuisine_type", "dish_type", "price_range", "atmosphere", "dietary_restrictions",
           "wait_times", "type_of_meal", "others"},
          {"location", "cuisine_type"}};
}

void StateSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& s : constraint_subkeys) {
    if (s.empty()) throw ValidationError("schema has an empty subkey");
    if (!seen.insert(s).second) throw ValidationError("schema repeats subkey '" + s + "'");
  }
  if (!seen.contains(std::string(kOthers))) throw ValidationError("schema must include the 'others' subkey");
  std::set<std::string> mandatory;
  for (const auto& s : mandatory_subkeys) {
    if (!seen.contains(s)) throw ValidationError("mandatory subkey '" + s + "' is not a constraint subkey");
    if (!mandatory.insert(s).second) throw ValidationError("mandatory subkey '" + s + "' listed twice");
  }
}

bool StateSchema::has_subkey(std::string_view subkey) const { return contains(constraint_subkeys, subkey); }

ConstraintProposal ConstraintProposal::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("constraint proposal must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "hard" && key != "soft") {
      throw ValidationError("constraint proposal has unexpected key '" + key + "'");
    }
  }
  return {proposal_map(j, "hard"), proposal_map(j, "soft")};
}

DialogueState new_state(const StateSchema& schema) {
  schema.validate();
  return {};
}

DialogueState apply_constraint_update(const DialogueState& state, const StateSchema& schema,
                                      const ConstraintProposal& proposal) {
  DialogueState next = state;
  apply_map(next.hard_constraints, proposal.hard, schema);
  apply_map(next.soft_constraints, proposal.soft, schema);
  return next;
}

DialogueState record_recommendation(const DialogueState& state, std::span<const std::string> item_ids) {
  if (item_ids.empty()) throw PreconditionError("record_recommendation needs at least one item");
  DialogueState next = state;
  for (const auto& id : item_ids) {
    if (id.empty()) throw PreconditionError("recommended item id is empty");
    if (!contains(next.recommended_items, id)) next.recommended_items.push_back(id);
  }
  return next;
}

DialogueState record_verdict(const DialogueState& state, const std::string& item_id, Verdict verdict) {
  if (!contains(state.recommended_items, item_id)) {
    throw PreconditionError("item '" + item_id + "' was never recommended");
  }
  const auto& opposite = verdict == Verdict::Accept ? state.rejected_items : state.accepted_items;
  if (contains(opposite, item_id)) {
    throw PreconditionError("item '" + item_id + "' already carries the opposite verdict");
  }
  DialogueState next = state;
  auto& target = verdict == Verdict::Accept ? next.accepted_items : next.rejected_items;
  if (!contains(target, item_id)) target.push_back(item_id);
  return next;
}

std::vector<std::string> missing_mandatory(const DialogueState& state, const StateSchema& schema) {
  std::vector<std::string> missing;
  // Schema order is constraint_subkeys order, not the mandatory list's order.
  for (const auto& subkey : schema.constraint_subkeys) {
    if (!contains(schema.mandatory_subkeys, subkey)) continue;
    auto it = state.hard_constraints.find(subkey);
    if (it == state.hard_constraints.end() || it->second.empty()) missing.push_back(subkey);
  }
  return missing;
}

void validate(const DialogueState& state, const StateSchema& schema) {
  validate_constraints(state.hard_constraints, schema, "hard_constraints");
  validate_constraints(state.soft_constraints, schema, "soft_constraints");
  std::set<std::string> recommended;
  for (const auto& id : state.recommended_items) {
    if (id.empty()) throw ValidationError("recommended_items holds an empty id");
    if (!recommended.insert(id).second) throw ValidationError("recommended_items repeats '" + id + "'");
  }
  std::set<std::string> rejected;
  for (const auto& id : state.rejected_items) {
    if (!recommended.contains(id)) throw ValidationError("rejected item '" + id + "' was never recommended");
    if (!rejected.insert(id).second) throw ValidationError("rejected_items repeats '" + id + "'");
  }
  std::set<std::string> accepted;
  for (const auto& id : state.accepted_items) {
    if (!recommended.contains(id)) throw ValidationError("accepted item '" + id + "' was never recommended");
    if (rejected.contains(id)) throw ValidationError("item '" + id + "' is both accepted and rejected");
    if (!accepted.insert(id).second) throw ValidationError("accepted_items repeats '" + id + "'");
  }
}

nlohmann::ordered_json to_json(const DialogueState& state) {
  auto constraints = [](const ConstraintMap& map) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [subkey, values] : map) {
      if (!values.empty()) j[subkey] = values;
    }
    return j;
  };
  nlohmann::ordered_json j;
  j["hard_constraints"] = constraints(state.hard_constraints);
  j["soft_constraints"] = constraints(state.soft_constraints);
  j["recommended_items"] = state.recommended_items;
  j["rejected_items"] = state.rejected_items;
  j["accepted_items"] = state.accepted_items;
  return j;
}

std::string serialize(const DialogueState& state) { return to_json(state).dump(); }

DialogueState state_from_json(const StateSchema& schema, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("state must be a JSON object");
  DialogueState state;
  state.hard_constraints = constraints_from_json(j, "hard_constraints");
  state.soft_constraints = constraints_from_json(j, "soft_constraints");
  state.recommended_items = items_from_json(j, "recommended_items");
  state.rejected_items = items_from_json(j, "rejected_items");
  state.accepted_items = items_from_json(j, "accepted_items");
  for (const auto& [key, _] : j.items()) {
    if (key != "hard_constraints" && key != "soft_constraints" && key != "recommended_items" &&
        key != "rejected_items" && key != "accepted_items") {
      throw ValidationError("state has unexpected key '" + key + "'");
    }
  }
  validate(state, schema);
  return state;
}

DialogueState deserialize(const StateSchema& schema, std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("state text is not valid JSON");
  return state_from_json(schema, j);
}

}  // namespace rarec
