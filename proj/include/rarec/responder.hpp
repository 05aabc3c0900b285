#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rarec/corpus.hpp"
#include "rarec/embedding.hpp"
#include "rarec/intents.hpp"
#include "rarec/llm.hpp"
#include "rarec/policy.hpp"
#include "rarec/prompts.hpp"
#include "rarec/retrieval.hpp"
#include "rarec/state.hpp"

namespace rarec {

struct ResponderConfig {
  int k = 2;
  int m = 5;
  std::size_t qa_reviews_per_item = 3;
};

// Template ids in the order they were rendered during one turn.
using PromptTrace = std::vector<std::string>;

struct RecommendedItem {
  std::string item_id;
  std::string name;
  double fused_score = 0.0;
  std::vector<Evidence> evidence;
  std::vector<std::string> top_reviews;  // texts of the fused review docs, best first
  MetadataMap metadata;
};

struct RecommendationResult {
  std::vector<RecommendedItem> items;
  std::string explanation_text;
  std::string query_text;
  // Retrieval came back empty (everything excluded); no explanation was generated.
  bool no_candidates = false;

  std::vector<std::string> item_ids() const;
};

enum class QaSource { Metadata, Reviews };

struct QaRouting {
  QaSource source = QaSource::Reviews;
  std::vector<std::string> fields;             // non-empty iff source == Metadata
  std::vector<std::string> items_in_question;  // ascending item_id

  bool operator==(const QaRouting&) const = default;
};

struct ReviewAnswer {
  std::string answer;
  std::string query_text;
  std::vector<std::pair<std::string, std::vector<Evidence>>> retrieved;  // per item, ascending item_id
  std::string prompt;  // final answer prompt, kept for audits
};

nlohmann::json to_json(const RecommendedItem& item);
nlohmann::json to_json(const QaRouting& routing);

// Executes the selected action against the index and the LLM. Holds only
// references; every method is a pure function of its arguments plus the
// backend's answers.
class Responder {
 public:
  Responder(const LlmBackend& llm, const PromptLibrary& prompts, const ReviewIndex& index, const Catalog& catalog,
            const EmbeddingProvider& encoder, const StateSchema& schema, ResponderConfig config = {});

  std::string generate_recommendation_query(const DialogueState& state, PromptTrace* trace = nullptr) const;
  RecommendationResult recommend_and_explain(const DialogueState& state, PromptTrace* trace = nullptr) const;

  // Items named in the utterance, else every recommended and not rejected
  // item. Throws PreconditionError when that leaves nothing to ask about.
  std::vector<std::string> items_in_question(const std::string& utterance, const DialogueState& state) const;
  QaRouting route_qa(const std::string& utterance, const DialogueState& state, PromptTrace* trace = nullptr) const;
  std::string answer_from_metadata(const std::string& utterance, const QaRouting& routing,
                                   PromptTrace* trace = nullptr) const;
  ReviewAnswer answer_from_reviews(const std::string& utterance, const std::vector<std::string>& item_ids,
                                   PromptTrace* trace = nullptr) const;

  // Greeting, RequestInformation, RespondToRejection, RespondToAcceptance, Clarify.
  std::string write_action_response(const SystemAction& action, const DialogueState& state,
                                    const std::string& utterance, PromptTrace* trace = nullptr) const;

  // Prompt texts, exposed so tests can audit context assembly.
  std::string explanation_prompt(const DialogueState& state, const std::vector<RecommendedItem>& items) const;
  std::string metadata_prompt(const std::string& utterance, const QaRouting& routing) const;

  const ResponderConfig& config() const { return config_; }

 private:
  std::string ask(const std::string& template_id, const std::map<std::string, std::string>& slots,
                  PromptTrace* trace) const;
  std::string item_name(const std::string& item_id) const;

  const LlmBackend& llm_;
  const PromptLibrary& prompts_;
  const ReviewIndex& index_;
  const Catalog& catalog_;
  const EmbeddingProvider& encoder_;
  const StateSchema& schema_;
  ResponderConfig config_;
};

// "- subkey: v1; v2" lines, or "(none)".
std::string render_constraints(const ConstraintMap& constraints);

// Update-constraints prompt -> fenced JSON proposal.
ConstraintProposal propose_constraint_update(const LlmBackend& llm, const PromptLibrary& prompts,
                                             const StateSchema& schema, const DialogueState& state,
                                             const std::string& utterance, const std::string& history_text,
                                             PromptTrace* trace = nullptr);

// Asks which recommended item the utterance accepts or rejects. The answer
// must name a recommended item (by id or display name); anything else throws
// PreconditionError.
std::string identify_verdict_item(const LlmBackend& llm, const PromptLibrary& prompts, const Catalog& catalog,
                                  const DialogueState& state, const std::string& utterance, Verdict verdict,
                                  PromptTrace* trace = nullptr);

}  // namespace rarec
