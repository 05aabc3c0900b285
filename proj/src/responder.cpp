#include "rarec/responder.hpp"

#include <algorithm>
#include <set>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

std::string single_line(const std::string& raw) {
  std::string line;
  for (std::size_t start = 0; start <= raw.size();) {
    auto end = raw.find('\n', start);
    if (end == std::string::npos) end = raw.size();
    line = trim(std::string_view(raw).substr(start, end - start));
    if (!line.empty()) break;
    start = end + 1;
  }
  if (line.size() >= 2 && (line.front() == '"' || line.front() == '\'') && line.back() == line.front()) {
    line = trim(line.substr(1, line.size() - 2));
  }
  return line;
}

std::string field_value_text(const MetadataMap& metadata, const std::string& field) {
  auto it = metadata.find(field);
  if (it == metadata.end() || it->second.is_null()) return "(not available)";
  return scalar_to_text(it->second);
}

std::string join_lines(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '\n';
    out += p;
  }
  return out;
}

}  // namespace

std::vector<std::string> RecommendationResult::item_ids() const {
  std::vector<std::string> ids;
  for (const auto& item : items) ids.push_back(item.item_id);
  return ids;
}

nlohmann::json to_json(const RecommendedItem& item) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : item.evidence) {
    evidence.push_back({{"doc_id", e.doc_id}, {"kind", to_string(e.kind)}, {"score", e.score}});
  }
  nlohmann::json metadata = nlohmann::json::object();
  for (const auto& [k, v] : item.metadata) metadata[k] = v;
  return {{"item_id", item.item_id}, {"name", item.name},   {"fused_score", item.fused_score},
          {"evidence", evidence},    {"top_reviews", item.top_reviews}, {"metadata", metadata}};
}

nlohmann::json to_json(const QaRouting& routing) {
  return {{"source", routing.source == QaSource::Metadata ? "metadata" : "reviews"},
          {"fields", routing.fields},
          {"items_in_question", routing.items_in_question}};
}

std::string render_constraints(const ConstraintMap& constraints) {
  std::vector<std::string> lines;
  for (const auto& [subkey, values] : constraints) {
    if (values.empty()) continue;
    std::string line = "- " + subkey + ": ";
    for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "; " : "") + values[i];
    lines.push_back(line);
  }
  return lines.empty() ? "(none)" : join_lines(lines);
}

Responder::Responder(const LlmBackend& llm, const PromptLibrary& prompts, const ReviewIndex& index,
                     const Catalog& catalog, const EmbeddingProvider& encoder, const StateSchema& schema,
                     ResponderConfig config)
    : llm_(llm),
      prompts_(prompts),
      index_(index),
      catalog_(catalog),
      encoder_(encoder),
      schema_(schema),
      config_(config) {
  if (config_.k < 1 || config_.m < 1) throw PreconditionError("k and m must be >= 1");
  if (encoder_.dim() != index_.dim()) {
    throw PreconditionError("query encoder dim " + std::to_string(encoder_.dim()) + " does not match index dim " +
                            std::to_string(index_.dim()));
  }
}

std::string Responder::ask(const std::string& template_id, const std::map<std::string, std::string>& slots,
                           PromptTrace* trace) const {
  const std::string prompt = prompts_.render(template_id, slots);
  if (trace != nullptr) trace->push_back(template_id);
  std::string answer = trim(llm_.complete(LlmRequest::from_prompt(prompt)));
  if (answer.empty()) throw LlmError("empty LLM response for '" + template_id + "'");
  return answer;
}

std::string Responder::item_name(const std::string& item_id) const {
  const auto* item = catalog_.find(item_id);
  return item != nullptr ? item->name : item_id;
}

std::string Responder::generate_recommendation_query(const DialogueState& state, PromptTrace* trace) const {
  if (auto missing = missing_mandatory(state, schema_); !missing.empty()) {
    throw PreconditionError("cannot build a recommendation query while '" + missing.front() + "' is missing");
  }
  const std::string query = single_line(ask("generate_recommendation_query",
                                            {{"hard_constraints", render_constraints(state.hard_constraints)},
                                             {"soft_constraints", render_constraints(state.soft_constraints)}},
                                            trace));
  if (query.empty()) throw LlmError("recommendation query came back empty");
  return query;
}

std::string Responder::explanation_prompt(const DialogueState& state,
                                          const std::vector<RecommendedItem>& items) const {
  std::vector<std::string> blocks;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    std::string block = std::to_string(i + 1) + ". " + item.name + "\n";
    block += "Metadata: " + render_metadata_text(catalog_.at(item.item_id)) + "\n";
    block += "Top reviews:";
    if (item.top_reviews.empty()) block += "\n- (no reviews)";
    for (const auto& r : item.top_reviews) block += "\n- " + r;
    blocks.push_back(block);
  }
  std::string joined;
  for (const auto& b : blocks) joined += (joined.empty() ? "" : "\n\n") + b;
  return prompts_.render("explain_recommendations", {{"hard_constraints", render_constraints(state.hard_constraints)},
                                                     {"soft_constraints", render_constraints(state.soft_constraints)},
                                                     {"items", joined}});
}

RecommendationResult Responder::recommend_and_explain(const DialogueState& state, PromptTrace* trace) const {
  RecommendationResult result;
  result.query_text = generate_recommendation_query(state, trace);

  RetrievalOptions options;
  options.k = config_.k;
  options.m = config_.m;
  options.kinds = DocKinds::all();
  options.exclude.insert(state.recommended_items.begin(), state.recommended_items.end());
  options.exclude.insert(state.rejected_items.begin(), state.rejected_items.end());

  const auto query = encoder_.encode(result.query_text);
  const auto scored = retrieve_items(index_, query.values(), options);
  if (scored.empty()) {
    result.no_candidates = true;
    return result;
  }
  for (const auto& s : scored) {
    RecommendedItem item;
    item.item_id = s.item_id;
    item.name = item_name(s.item_id);
    item.fused_score = s.fused_score;
    item.evidence = s.evidence;
    for (const auto& e : s.evidence) {
      if (e.kind == DocKind::Review) item.top_reviews.push_back(index_.row(*index_.find_doc(e.doc_id)).text);
    }
    if (const auto* record = catalog_.find(s.item_id)) item.metadata = record->metadata;
    result.items.push_back(std::move(item));
  }

  const std::string prompt = explanation_prompt(state, result.items);
  if (trace != nullptr) trace->push_back("explain_recommendations");
  result.explanation_text = trim(llm_.complete(LlmRequest::from_prompt(prompt)));
  if (result.explanation_text.empty()) throw LlmError("empty recommendation explanation");
  return result;
}

std::vector<std::string> Responder::items_in_question(const std::string& utterance, const DialogueState& state) const {
  std::set<std::string> named;
  for (const auto& item : catalog_.items()) {
    if (contains_ci(utterance, item.name)) named.insert(item.item_id);
  }
  if (named.empty()) {
    std::set<std::string> rejected(state.rejected_items.begin(), state.rejected_items.end());
    for (const auto& id : state.recommended_items) {
      if (!rejected.contains(id)) named.insert(id);
    }
  }
  if (named.empty()) throw PreconditionError("the inquiry names no item and nothing has been recommended yet");
  return {named.begin(), named.end()};
}

QaRouting Responder::route_qa(const std::string& utterance, const DialogueState& state, PromptTrace* trace) const {
  QaRouting routing;
  routing.items_in_question = items_in_question(utterance, state);

  std::set<std::string> known_fields;
  std::vector<std::string> blocks;
  for (const auto& id : routing.items_in_question) {
    const auto& item = catalog_.at(id);
    std::string block = item.name + ":";
    if (item.metadata.empty()) block += "\n- (no metadata)";
    for (const auto& [field, value] : item.metadata) {
      known_fields.insert(field);
      block += "\n- " + field + ": " + (value.is_null() ? std::string("(not available)") : scalar_to_text(value));
    }
    blocks.push_back(block);
  }

  const std::string raw = ask("determine_qa_source", {{"utterance", utterance}, {"metadata", join_lines(blocks)}}, trace);
  nlohmann::json answer;
  try {
    answer = extract_fenced_json(raw);
  } catch (const ValidationError& e) {
    log_warning(std::string("QA routing answer unusable, falling back to reviews: ") + e.what());
    return routing;
  }
  if (!answer.is_object() || answer.value("source", std::string()) != "metadata") return routing;

  std::vector<std::string> fields;
  const auto it = answer.find("fields");
  if (it != answer.end() && it->is_array()) {
    for (const auto& f : *it) {
      if (!f.is_string() || !known_fields.contains(f.get<std::string>())) {
        log_warning("QA routing named unknown metadata field " + f.dump() + ", falling back to reviews");
        return routing;
      }
      if (std::find(fields.begin(), fields.end(), f.get<std::string>()) == fields.end()) fields.push_back(f.get<std::string>());
    }
  }
  if (fields.empty()) {
    log_warning("QA routing chose metadata without fields, falling back to reviews");
    return routing;
  }
  routing.source = QaSource::Metadata;
  routing.fields = std::move(fields);
  return routing;
}

std::string Responder::metadata_prompt(const std::string& utterance, const QaRouting& routing) const {
  std::vector<std::string> blocks;
  for (const auto& id : routing.items_in_question) {
    const auto& item = catalog_.at(id);
    std::string block = item.name + ":";
    for (const auto& field : routing.fields) block += "\n- " + field + ": " + field_value_text(item.metadata, field);
    blocks.push_back(block);
  }
  return prompts_.render("answer_from_metadata", {{"utterance", utterance}, {"metadata", join_lines(blocks)}});
}

std::string Responder::answer_from_metadata(const std::string& utterance, const QaRouting& routing,
                                            PromptTrace* trace) const {
  if (routing.source != QaSource::Metadata || routing.fields.empty()) {
    throw PreconditionError("answer_from_metadata needs a metadata routing with fields");
  }
  const std::string prompt = metadata_prompt(utterance, routing);
  if (trace != nullptr) trace->push_back("answer_from_metadata");
  auto answer = trim(llm_.complete(LlmRequest::from_prompt(prompt)));
  if (answer.empty()) throw LlmError("empty metadata answer");
  return answer;
}

ReviewAnswer Responder::answer_from_reviews(const std::string& utterance, const std::vector<std::string>& item_ids,
                                            PromptTrace* trace) const {
  ReviewAnswer out;
  out.query_text = single_line(ask("generate_qa_query", {{"utterance", utterance}}, trace));
  if (out.query_text.empty()) throw LlmError("QA query came back empty");
  const auto query = encoder_.encode(out.query_text);

  std::vector<std::string> ordered(item_ids.begin(), item_ids.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  std::vector<std::string> blocks;
  for (const auto& id : ordered) {
    auto evidence = top_item_documents(index_, query.values(), id, config_.qa_reviews_per_item, DocKinds::reviews_only());
    std::string block = item_name(id) + ":";
    if (evidence.empty()) block += "\n(no reviews)";
    for (const auto& e : evidence) block += "\n- " + index_.row(*index_.find_doc(e.doc_id)).text;
    blocks.push_back(block);
    out.retrieved.emplace_back(id, std::move(evidence));
  }
  std::string joined;
  for (const auto& b : blocks) joined += (joined.empty() ? "" : "\n\n") + b;
  out.prompt = prompts_.render("answer_from_reviews", {{"utterance", utterance}, {"reviews", joined}});
  if (trace != nullptr) trace->push_back("answer_from_reviews");
  out.answer = trim(llm_.complete(LlmRequest::from_prompt(out.prompt)));
  if (out.answer.empty()) throw LlmError("empty review answer");
  return out;
}

std::string Responder::write_action_response(const SystemAction& action, const DialogueState& state,
                                             const std::string& utterance, PromptTrace* trace) const {
  auto names = [&](const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + item_name(id);
    return out.empty() ? std::string("(none)") : out;
  };
  switch (action.kind) {
    case ActionKind::Greeting:
      return ask("greeting", {}, trace);
    case ActionKind::RequestInformation:
      if (action.subkey.empty()) throw PreconditionError("RequestInformation needs a subkey");
      return ask("request_information",
                 {{"subkey", action.subkey}, {"hard_constraints", render_constraints(state.hard_constraints)}}, trace);
    case ActionKind::RespondToRejection:
      return ask("respond_rejection", {{"utterance", utterance}, {"rejected_items", names(state.rejected_items)}}, trace);
    case ActionKind::RespondToAcceptance:
      return ask("respond_acceptance", {{"utterance", utterance}, {"accepted_items", names(state.accepted_items)}},
                 trace);
    case ActionKind::Clarify:
      return ask("clarify", {{"utterance", utterance}}, trace);
    case ActionKind::RecommendAndExplain:
    case ActionKind::Answer:
      break;
  }
  throw PreconditionError("write_action_response cannot handle " + to_string(action));
}

ConstraintProposal propose_constraint_update(const LlmBackend& llm, const PromptLibrary& prompts,
                                             const StateSchema& schema, const DialogueState& state,
                                             const std::string& utterance, const std::string& history_text,
                                             PromptTrace* trace) {
  std::string subkeys;
  for (const auto& s : schema.constraint_subkeys) subkeys += (subkeys.empty() ? "" : ", ") + s;
  const auto prompt = prompts.render("update_constraints", {{"utterance", utterance},
                                                            {"history", history_text},
                                                            {"subkeys", subkeys},
                                                            {"hard_constraints", render_constraints(state.hard_constraints)},
                                                            {"soft_constraints", render_constraints(state.soft_constraints)}});
  if (trace != nullptr) trace->push_back("update_constraints");
  const auto raw = llm.complete(LlmRequest::from_prompt(prompt));
  try {
    return ConstraintProposal::from_json(extract_fenced_json(raw));
  } catch (const ValidationError& e) {
    throw LlmError(std::string("unusable constraint update: ") + e.what());
  }
}

std::string identify_verdict_item(const LlmBackend& llm, const PromptLibrary& prompts, const Catalog& catalog,
                                  const DialogueState& state, const std::string& utterance, Verdict verdict,
                                  PromptTrace* trace) {
  if (state.recommended_items.empty()) throw PreconditionError("nothing has been recommended yet");
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < state.recommended_items.size(); ++i) {
    const auto& id = state.recommended_items[i];
    const auto* item = catalog.find(id);
    lines.push_back(std::to_string(i + 1) + ". " + (item ? item->name : id) + " (id: " + id + ")");
  }
  const auto prompt = prompts.render("update_verdict_item",
                                     {{"utterance", utterance},
                                      {"verdict", verdict == Verdict::Accept ? "accepted" : "rejected"},
                                      {"items", join_lines(lines)}});
  if (trace != nullptr) trace->push_back("update_verdict_item");
  std::string answer = single_line(llm.complete(LlmRequest::from_prompt(prompt)));
  while (!answer.empty() && std::ispunct(static_cast<unsigned char>(answer.back())) && answer.back() != '_') {
    answer.pop_back();
  }
  for (const auto& id : state.recommended_items) {
    const auto* item = catalog.find(id);
    if (answer == id || (item != nullptr && to_lower(answer) == to_lower(item->name))) return id;
  }
  throw PreconditionError("the " + std::string(verdict == Verdict::Accept ? "accepted" : "rejected") +
                          " item \"" + answer + "\" is not among the recommended items");
}

}  // namespace rarec
