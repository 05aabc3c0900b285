#include "rarec/text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <mutex>

#include "rarec/error.hpp"

namespace rarec {

namespace {
std::atomic<bool> g_warnings_enabled{true};
std::mutex g_log_mutex;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string trim(std::string_view s) {
  auto begin = s.begin();
  auto end = s.end();
  while (begin != end && is_space(*begin)) ++begin;
  while (end != begin && is_space(*(end - 1))) --end;
  return std::string(begin, end);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

nlohmann::json extract_fenced_json(std::string_view text) {
  const auto fence = text.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = text.find('\n', fence + 3);
    if (body_start == std::string_view::npos) {
      throw ValidationError("unterminated fenced block");
    }
    ++body_start;
    const auto close = text.find("```", body_start);
    if (close == std::string_view::npos) {
      throw ValidationError("unterminated fenced block");
    }
    auto parsed = nlohmann::json::parse(text.substr(body_start, close - body_start), nullptr, false);
    if (parsed.is_discarded()) throw ValidationError("fenced block is not valid JSON");
    return parsed;
  }
  auto parsed = nlohmann::json::parse(trim(text), nullptr, false);
  if (parsed.is_discarded()) throw ValidationError("response contains no JSON block");
  return parsed;
}

std::string scalar_to_text(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return "null";
  return value.dump();
}

void log_warning(std::string_view message) {
  if (!g_warnings_enabled.load()) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[rarec] warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

}  // namespace rarec
