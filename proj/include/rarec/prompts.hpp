#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace rarec {

// Template text uses {slot} placeholders; {{ and }} are literal braces.
struct PromptTemplate {
  std::string template_id;
  std::string text;
  std::set<std::string> required_slots;
};

// Parses one template file: first line "# slots: a, b, c", then the body.
// Throws TemplateError when declared and used slots disagree.
PromptTemplate parse_template(const std::string& template_id, const std::string& file_text);

// Slot names appearing as placeholders in a template body.
std::set<std::string> placeholders_in(const std::string& text);

class PromptLibrary {
 public:
  PromptLibrary() = default;
  explicit PromptLibrary(std::vector<PromptTemplate> templates);

  // Loads every "<id>.txt" under dir.
  static PromptLibrary load_dir(const std::filesystem::path& dir);

  std::string render(const std::string& template_id, const std::map<std::string, std::string>& slots) const;
  const PromptTemplate& get(const std::string& template_id) const;
  bool contains(const std::string& template_id) const { return templates_.contains(template_id); }
  std::vector<std::string> catalog() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// Template ids the pipeline renders; load_dir fails if any is missing.
const std::vector<std::string>& required_template_ids();

}  // namespace rarec
