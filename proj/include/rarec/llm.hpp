#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rarec {

enum class Role { System, User, Assistant };

struct ChatMessage {
  Role role;
  std::string content;
};

struct LlmRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;

  static LlmRequest from_prompt(std::string prompt);
  // Throws PreconditionError on an empty message list or empty content.
  void validate() const;
  const std::string& last_user_message() const;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // Returns non-empty text. Throws LlmError (or NoMatchError) when the backend
  // answers unusably, TransportError when it cannot be reached.
  virtual std::string complete(const LlmRequest& request) const = 0;
};

// Rule patterns without '*' match as substrings. Patterns containing '*' are
// anchored globs over the whole message, where '*' spans any text.
struct ScriptedRule {
  std::string pattern;
  std::string response;
  int priority = 0;
};

bool pattern_matches(std::string_view pattern, std::string_view text);

// Answers from canned rules by matching the final user message. Rules are
// tried by priority (highest first), then file order; the first match wins.
class ScriptedBackend final : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptedRule> rules);

  std::string complete(const LlmRequest& request) const override;
  const std::vector<ScriptedRule>& rules() const { return rules_; }

 private:
  std::vector<ScriptedRule> rules_;
};

// JSON array of {pattern, response, priority}; result is in match order.
std::vector<ScriptedRule> parse_script(const nlohmann::json& j);
std::vector<ScriptedRule> load_script(const std::filesystem::path& path);

struct RemoteLlmConfig {
  std::string base_url;
  std::string model = "gpt-3.5-turbo";
  std::string api_key;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};
  int max_in_flight = 4;
};

// Chat-completions client: POST <base_url>/v1/chat/completions, answer read
// from choices[0].message.content. Transport failures, 429 and 5xx are
// retried with exponential backoff.
class RemoteLlmBackend final : public LlmBackend {
 public:
  explicit RemoteLlmBackend(RemoteLlmConfig config);

  std::string complete(const LlmRequest& request) const override;

  static nlohmann::json request_body(const LlmRequest& request, const std::string& model);

 private:
  RemoteLlmConfig config_;
  mutable std::counting_semaphore<> in_flight_;
};

// {"backend": "scripted", "script_file": ...} or
// {"backend": "remote", "base_url": ..., "model"?, "timeout_ms"?, "retries"?}.
// The API key comes from $RA_REC_LLM_API_KEY. Relative paths resolve
// against base_dir.
std::unique_ptr<LlmBackend> make_llm_backend(const nlohmann::json& config, const std::filesystem::path& base_dir);

}  // namespace rarec
