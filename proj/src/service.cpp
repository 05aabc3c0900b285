#include "rarec/service.hpp"

#include <fstream>
#include <random>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

std::vector<std::string> string_list(const json& j, const char* key) {
  if (!j.is_array()) throw ValidationError(std::string("config '") + key + "' must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ValidationError(std::string("config '") + key + "' must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ServiceConfig c;
  c.base_dir = base_dir;
  try {
    c.index_dir = resolve(base_dir, j.at("index_dir").get<std::string>());
    if (j.contains("prompts_dir")) c.prompts_dir = resolve(base_dir, j["prompts_dir"].get<std::string>());
    if (j.contains("transcript_dir")) c.transcript_dir = resolve(base_dir, j["transcript_dir"].get<std::string>());
    c.llm = j.value("llm", json::object());
    c.encoder = j.value("encoder", json::object());
    c.responder.k = j.value("k", 2);
    c.responder.m = j.value("m", 5);
    c.responder.qa_reviews_per_item = j.value("qa_reviews_per_item", std::size_t{3});
    if (j.contains("constraint_subkeys")) c.schema.constraint_subkeys = string_list(j["constraint_subkeys"], "constraint_subkeys");
    if (j.contains("mandatory_subkeys")) c.schema.mandatory_subkeys = string_list(j["mandatory_subkeys"], "mandatory_subkeys");
    c.history_window = j.value("history_window", std::size_t{4});
    c.concurrent_intents = j.value("concurrent_intents", true);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
  if (c.responder.k < 1 || c.responder.m < 1) throw ValidationError("config k and m must be >= 1");
  c.schema.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config " + path.string() + " is not valid JSON");
  return from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::shared_ptr<const Engine> Engine::from_config(const ServiceConfig& config) {
  auto engine = std::make_shared<Engine>();
  engine->index = std::make_shared<const ReviewIndex>(load_index(config.index_dir));
  engine->catalog = std::make_shared<const Catalog>(load_items((config.index_dir / "items.jsonl").string()));
  engine->prompts = std::make_shared<const PromptLibrary>(PromptLibrary::load_dir(config.prompts_dir));
  engine->llm = make_llm_backend(config.llm, config.base_dir);

  json encoder_config = config.encoder;
  if (!encoder_config.contains("dim")) encoder_config["dim"] = engine->index->dim();
  engine->encoder = make_embedding_provider(encoder_config);
  const auto& manifest = engine->index->manifest();
  if (engine->encoder->provider_id() != manifest.provider_id) {
    throw ValidationError("encoder '" + engine->encoder->provider_id() + "' does not match the index's '" +
                          manifest.provider_id + "'");
  }
  for (const auto& [item_id, _] : engine->index->item_directory()) {
    if (engine->catalog->find(item_id) == nullptr) {
      throw ValidationError("index references item '" + item_id + "' missing from items.jsonl");
    }
  }
  engine->schema = config.schema;
  engine->responder_config = config.responder;
  engine->history_window = config.history_window;
  engine->concurrent_intents = config.concurrent_intents;
  return engine;
}

Responder Engine::responder() const {
  return Responder(*llm, *prompts, *index, *catalog, *encoder, schema, responder_config);
}

nlohmann::ordered_json TurnResult::to_json() const {
  nlohmann::ordered_json j;
  j["response_text"] = response_text;
  j["action"] = rarec::to_string(action);
  j["intents"] = intents.names();
  j["state"] = rarec::to_json(state);
  j["prompt_ids_used"] = prompt_ids_used;
  if (diagnostics) j["diagnostics"] = nlohmann::ordered_json::parse(diagnostics->dump());
  return j;
}

TurnResult run_turn(const Engine& engine, const DialogueState& state, const std::vector<HistoryTurn>& history,
                    const std::string& utterance) {
  if (trim(utterance).empty()) throw PreconditionError("utterance is empty");
  TurnResult result;
  PromptTrace trace;

  ClassifyOptions classify_options;
  classify_options.history_window = engine.history_window;
  classify_options.concurrent = engine.concurrent_intents;
  result.intents = classify(*engine.llm, *engine.prompts, utterance, history, classify_options);
  for (std::size_t i = 0; i < kAllIntents.size(); ++i) trace.push_back("classify_intent");

  DialogueState next = state;
  const std::string history_text = render_history(history, engine.history_window);
  if (result.intents.contains(Intent::ProvidePreference)) {
    auto proposal = propose_constraint_update(*engine.llm, *engine.prompts, engine.schema, next, utterance,
                                              history_text, &trace);
    next = apply_constraint_update(next, engine.schema, proposal);
  }
  for (auto [intent, verdict] : {std::pair{Intent::AcceptRecommendation, Verdict::Accept},
                                 std::pair{Intent::RejectRecommendation, Verdict::Reject}}) {
    if (!result.intents.contains(intent)) continue;
    if (next.recommended_items.empty()) {
      log_warning("verdict intent " + to_string(intent) + " before any recommendation; nothing recorded");
      continue;
    }
    auto item_id = identify_verdict_item(*engine.llm, *engine.prompts, *engine.catalog, next, utterance, verdict, &trace);
    next = record_verdict(next, item_id, verdict);
  }

  result.action = select_action(next, engine.schema, result.intents, false);
  const auto responder = engine.responder();
  switch (result.action.kind) {
    case ActionKind::RecommendAndExplain: {
      auto rec = responder.recommend_and_explain(next, &trace);
      json items = json::array();
      for (const auto& item : rec.items) items.push_back(to_json(item));
      result.diagnostics = json{{"query_text", rec.query_text}, {"scored_items", items}, {"no_candidates", rec.no_candidates}};
      if (rec.no_candidates) {
        result.response_text =
            "I couldn't find any other places that match what you're looking for. Would you like to change any of "
            "your preferences?";
      } else {
        next = record_recommendation(next, rec.item_ids());
        result.response_text = rec.explanation_text;
      }
      break;
    }
    case ActionKind::Answer: {
      std::vector<std::string> items;
      try {
        items = responder.items_in_question(utterance, next);
      } catch (const PreconditionError&) {
        result.response_text = responder.write_action_response({ActionKind::Clarify, {}}, next, utterance, &trace);
        result.diagnostics = json{{"qa_routing", nullptr}};
        break;
      }
      auto routing = responder.route_qa(utterance, next, &trace);
      json diag{{"qa_routing", to_json(routing)}};
      if (routing.source == QaSource::Metadata) {
        result.response_text = responder.answer_from_metadata(utterance, routing, &trace);
      } else {
        auto answer = responder.answer_from_reviews(utterance, routing.items_in_question, &trace);
        json retrieved = json::object();
        for (const auto& [id, evidence] : answer.retrieved) {
          json list = json::array();
          for (const auto& e : evidence) list.push_back({{"doc_id", e.doc_id}, {"score", e.score}});
          retrieved[id] = list;
        }
        diag["query_text"] = answer.query_text;
        diag["retrieved_reviews"] = retrieved;
        result.response_text = answer.answer;
      }
      result.diagnostics = std::move(diag);
      break;
    }
    default:
      result.response_text = responder.write_action_response(result.action, next, utterance, &trace);
      break;
  }
  validate(next, engine.schema);
  result.state = std::move(next);
  result.prompt_ids_used = std::move(trace);
  return result;
}

SessionManager::SessionManager(std::shared_ptr<const Engine> engine, std::optional<fs::path> transcript_dir)
    : engine_(std::move(engine)), transcript_dir_(std::move(transcript_dir)) {
  std::random_device rd;
  rng_state_[0] = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  rng_state_[1] = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  if (transcript_dir_) fs::create_directories(*transcript_dir_);
}

std::string SessionManager::new_session_id() {
  std::lock_guard lock(rng_mutex_);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (auto& word : rng_state_) {
    // splitmix64 step per half of the 128-bit id
    std::uint64_t z = (word += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    for (int i = 15; i >= 0; --i) id += kHex[(z >> (4 * i)) & 0xf];
  }
  return id;
}

CreatedSession SessionManager::create_session() {
  if (!engine_) throw PreconditionError("service is not ready");
  auto session = std::make_shared<Session>();
  session->created_at = std::chrono::system_clock::now();
  session->state = new_state(engine_->schema);
  session->greeting =
      engine_->responder().write_action_response({ActionKind::Greeting, {}}, session->state, std::string());
  std::lock_guard lock(sessions_mutex_);
  do {
    session->id = new_session_id();
  } while (sessions_.contains(session->id));
  sessions_.emplace(session->id, session);
  return {session->id, session->greeting};
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  return it->second;
}

TurnResult SessionManager::process_turn(const std::string& session_id, const std::string& utterance) {
  auto session = find(session_id);
  if (trim(utterance).empty()) throw PreconditionError("utterance is empty");

  std::unique_lock lock(session->mutex);
  const std::uint64_t ticket = session->next_ticket++;
  session->turn_done.wait(lock, [&] { return session->now_serving == ticket; });
  struct Advance {
    Session& s;
    std::unique_lock<std::mutex>& lock;
    ~Advance() {
      if (!lock.owns_lock()) lock.lock();
      ++s.now_serving;
      s.turn_done.notify_all();
    }
  } advance{*session, lock};

  const DialogueState state = session->state;
  std::vector<HistoryTurn> history;
  for (const auto& t : session->transcript) history.push_back({t.utterance, t.result.response_text});
  lock.unlock();

  TurnResult result = run_turn(*engine_, state, history, utterance);

  lock.lock();
  session->state = result.state;
  session->transcript.push_back({utterance, result});
  persist(*session, session->transcript.back());
  return result;
}

void SessionManager::persist(const Session& session, const Turn& turn) const {
  if (!transcript_dir_) return;
  std::ofstream out(*transcript_dir_ / (session.id + ".jsonl"), std::ios::app);
  if (!out) {
    log_warning("cannot append transcript for session " + session.id);
    return;
  }
  out << nlohmann::ordered_json{{"session_id", session.id},
              {"turn", session.transcript.size()},
              {"utterance", turn.utterance},
              {"result", turn.result.to_json()}}
             .dump()
      << '\n';
}

DialogueState SessionManager::get_state(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return session->state;
}

std::vector<Turn> SessionManager::transcript(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return session->transcript;
}

std::string SessionManager::greeting(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return session->greeting;
}

void SessionManager::delete_session(const std::string& session_id) {
  std::lock_guard lock(sessions_mutex_);
  if (sessions_.erase(session_id) == 0) throw NotFoundError("unknown session '" + session_id + "'");
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace rarec
