#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rarec/responder.hpp"

namespace rarec {

struct ServiceConfig {
  std::filesystem::path index_dir;
  std::filesystem::path prompts_dir = RAREC_DEFAULT_PROMPTS_DIR;
  std::optional<std::filesystem::path> transcript_dir;
  nlohmann::json llm = nlohmann::json::object();
  nlohmann::json encoder = nlohmann::json::object();
  ResponderConfig responder;
  StateSchema schema = StateSchema::restaurant_default();
  std::size_t history_window = 4;
  bool concurrent_intents = true;
  std::filesystem::path base_dir = ".";

  // Relative paths resolve against base_dir (the config file's directory).
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static ServiceConfig load(const std::filesystem::path& path);
};

// Shared, immutable resources every session reads.
struct Engine {
  std::shared_ptr<const ReviewIndex> index;
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const EmbeddingProvider> encoder;
  std::shared_ptr<const LlmBackend> llm;
  std::shared_ptr<const PromptLibrary> prompts;
  StateSchema schema = StateSchema::restaurant_default();
  ResponderConfig responder_config;
  std::size_t history_window = 4;
  bool concurrent_intents = true;

  // Loads the index directory (including its items.jsonl), the prompt
  // library and both backends. Rejects an encoder whose provider_id or dim
  // disagree with the index manifest.
  static std::shared_ptr<const Engine> from_config(const ServiceConfig& config);

  Responder responder() const;
};

struct TurnResult {
  std::string response_text;
  SystemAction action;
  IntentSet intents;
  DialogueState state;
  std::vector<std::string> prompt_ids_used;
  // Present only when the action used retrieval or QA.
  std::optional<nlohmann::json> diagnostics;

  // Keys in a fixed order; the state keeps its own fixed key order.
  nlohmann::ordered_json to_json() const;
};

struct Turn {
  std::string utterance;
  TurnResult result;
};

// Runs classify -> update -> select -> respond for one utterance without
// touching any session; the caller commits the returned state.
TurnResult run_turn(const Engine& engine, const DialogueState& state, const std::vector<HistoryTurn>& history,
                    const std::string& utterance);

struct CreatedSession {
  std::string session_id;
  std::string greeting;
};

class SessionManager {
 public:
  explicit SessionManager(std::shared_ptr<const Engine> engine,
                          std::optional<std::filesystem::path> transcript_dir = std::nullopt);

  CreatedSession create_session();
  // Turns of one session run strictly in arrival order; a failed turn leaves
  // the session untouched.
  TurnResult process_turn(const std::string& session_id, const std::string& utterance);
  DialogueState get_state(const std::string& session_id) const;
  std::vector<Turn> transcript(const std::string& session_id) const;
  std::string greeting(const std::string& session_id) const;
  void delete_session(const std::string& session_id);

  std::size_t session_count() const;
  bool ready() const { return engine_ != nullptr; }
  const Engine& engine() const { return *engine_; }

 private:
  struct Session {
    std::string id;
    std::chrono::system_clock::time_point created_at;
    std::string greeting;
    DialogueState state;
    std::vector<Turn> transcript;

    mutable std::mutex mutex;
    std::condition_variable turn_done;
    std::uint64_t next_ticket = 0;
    std::uint64_t now_serving = 0;
  };

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::string new_session_id();
  void persist(const Session& session, const Turn& turn) const;

  std::shared_ptr<const Engine> engine_;
  std::optional<std::filesystem::path> transcript_dir_;
  mutable std::mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mutex_;
  std::uint64_t rng_state_[2];
};

}  // namespace rarec
