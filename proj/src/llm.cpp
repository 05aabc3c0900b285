#include "rarec/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "httplib.h"
#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

const char* role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

// Iterative glob with single-star backtracking.
bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, resume = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      resume = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++resume;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

LlmRequest LlmRequest::from_prompt(std::string prompt) {
  LlmRequest r;
  r.messages.push_back({Role::User, std::move(prompt)});
  return r;
}

void LlmRequest::validate() const {
  if (messages.empty()) throw PreconditionError("LLM request has no messages");
  for (const auto& m : messages) {
    if (trim(m.content).empty()) throw PreconditionError("LLM request has an empty message");
  }
  if (temperature < 0.0) throw PreconditionError("temperature must be >= 0");
  if (max_tokens < 1) throw PreconditionError("max_tokens must be positive");
}

const std::string& LlmRequest::last_user_message() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  throw PreconditionError("LLM request has no user message");
}

bool pattern_matches(std::string_view pattern, std::string_view text) {
  if (pattern.find('*') == std::string_view::npos) return text.find(pattern) != std::string_view::npos;
  return glob_match(pattern, text);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules) : rules_(std::move(rules)) {
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : rules_) {
    if (!seen.emplace(r.pattern, r.priority).second) {
      throw ValidationError("duplicate scripted rule (pattern '" + r.pattern + "', priority " +
                            std::to_string(r.priority) + ")");
    }
  }
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const ScriptedRule& a, const ScriptedRule& b) { return a.priority > b.priority; });
}

std::string ScriptedBackend::complete(const LlmRequest& request) const {
  request.validate();
  const auto& message = request.last_user_message();
  for (const auto& rule : rules_) {
    if (pattern_matches(rule.pattern, message)) return rule.response;
  }
  std::string head = message.substr(0, 80);
  std::replace(head.begin(), head.end(), '\n', ' ');
  throw NoMatchError("no scripted rule matches prompt: \"" + head + "\"");
}

std::vector<ScriptedRule> parse_script(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("script must be a JSON array of rules");
  std::vector<ScriptedRule> rules;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    if (!r.is_object() || !r.contains("pattern") || !r["pattern"].is_string() || !r.contains("response") ||
        !r["response"].is_string()) {
      throw ValidationError("script rule " + std::to_string(i) + " needs string 'pattern' and 'response'");
    }
    ScriptedRule rule{r["pattern"].get<std::string>(), r["response"].get<std::string>(), 0};
    if (rule.pattern.empty()) throw ValidationError("script rule " + std::to_string(i) + " has an empty pattern");
    if (trim(rule.response).empty()) throw ValidationError("script rule " + std::to_string(i) + " has an empty response");
    if (r.contains("priority")) {
      if (!r["priority"].is_number_integer()) {
        throw ValidationError("script rule " + std::to_string(i) + " priority must be an integer");
      }
      rule.priority = r["priority"].get<int>();
    }
    rules.push_back(std::move(rule));
  }
  return ScriptedBackend(std::move(rules)).rules();
}

std::vector<ScriptedRule> load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open script " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("script " + path.string() + " is not valid JSON");
  return parse_script(j);
}

RemoteLlmBackend::RemoteLlmBackend(RemoteLlmConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.base_url.empty()) throw PreconditionError("remote LLM backend needs a base_url");
}

nlohmann::json RemoteLlmBackend::request_body(const LlmRequest& request, const std::string& model) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return {{"model", model}, {"messages", messages}, {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

std::string RemoteLlmBackend::complete(const LlmRequest& request) const {
  request.validate();
  const std::string payload = request_body(request, config_.model).dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  std::string last_error;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Post("/v1/chat/completions", payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw LlmError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    try {
      if (parsed.is_discarded()) throw LlmError("LLM response is not JSON");
      const auto& content = parsed.at("choices").at(0).at("message").at("content");
      if (!content.is_string() || trim(content.get<std::string>()).empty()) {
        throw LlmError("LLM response content is empty");
      }
      return content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw LlmError("LLM response lacks choices[0].message.content");
    }
  }
  throw TransportError("LLM request to " + config_.base_url + " failed after " + std::to_string(config_.retries + 1) +
                 " attempts: " + last_error);
}

std::unique_ptr<LlmBackend> make_llm_backend(const nlohmann::json& config, const std::filesystem::path& base_dir) {
  const std::string backend = config.value("backend", std::string("scripted"));
  if (backend == "scripted") {
    const std::string file = config.value("script_file", std::string());
    if (file.empty()) throw ValidationError("scripted LLM backend needs 'script_file'");
    std::filesystem::path path(file);
    if (path.is_relative()) path = base_dir / path;
    return std::make_unique<ScriptedBackend>(load_script(path));
  }
  if (backend == "remote") {
    RemoteLlmConfig rc;
    rc.base_url = config.value("base_url", std::string());
    rc.model = config.value("model", rc.model);
    rc.timeout = std::chrono::milliseconds(config.value("timeout_ms", 60000));
    rc.retries = config.value("retries", 2);
    rc.backoff = std::chrono::milliseconds(config.value("backoff_ms", 500));
    rc.max_in_flight = config.value("max_in_flight", 4);
    if (const char* key = std::getenv("RA_REC_LLM_API_KEY")) rc.api_key = key;
    return std::make_unique<RemoteLlmBackend>(std::move(rc));
  }
  throw ValidationError("unknown LLM backend '" + backend + "'");
}

}  // namespace rarec
