#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rarec {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Extracts the first ```-fenced block (language tag optional) and parses it as
// JSON. Falls back to parsing the whole text when no fence is present.
// Throws ValidationError when nothing parses.
nlohmann::json extract_fenced_json(std::string_view text);

// Renders a scalar JSON value the way it appears in prompts and metadata docs.
std::string scalar_to_text(const nlohmann::json& value);

void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace rarec
