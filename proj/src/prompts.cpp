#include "rarec/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

enum class PieceKind { Literal, Slot };
struct Piece {
  PieceKind kind;
  std::string value;
};

// Splits a template body into literal and slot pieces.
std::vector<Piece> tokenize(const std::string& text) {
  std::vector<Piece> pieces;
  std::string literal;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{') {
      if (i + 1 < text.size() && text[i + 1] == '{') {
        literal += '{';
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (j < text.size() && is_ident_start(text[j])) {
        while (j < text.size() && is_ident_char(text[j])) ++j;
        if (j < text.size() && text[j] == '}') {
          if (!literal.empty()) pieces.push_back({PieceKind::Literal, std::move(literal)});
          literal.clear();
          pieces.push_back({PieceKind::Slot, text.substr(i + 1, j - i - 1)});
          i = j;
          continue;
        }
      }
      throw TemplateError("stray '{' at offset " + std::to_string(i) + " (write {{ for a literal brace)");
    }
    if (c == '}') {
      if (i + 1 < text.size() && text[i + 1] == '}') {
        literal += '}';
        ++i;
        continue;
      }
      throw TemplateError("stray '}' at offset " + std::to_string(i) + " (write }} for a literal brace)");
    }
    literal += c;
  }
  if (!literal.empty()) pieces.push_back({PieceKind::Literal, std::move(literal)});
  return pieces;
}

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

std::set<std::string> placeholders_in(const std::string& text) {
  std::set<std::string> slots;
  for (const auto& piece : tokenize(text)) {
    if (piece.kind == PieceKind::Slot) slots.insert(piece.value);
  }
  return slots;
}

PromptTemplate parse_template(const std::string& template_id, const std::string& file_text) {
  const auto newline = file_text.find('\n');
  const std::string header = trim(file_text.substr(0, newline));
  const std::string body = newline == std::string::npos ? std::string() : file_text.substr(newline + 1);
  constexpr std::string_view kHeader = "# slots:";
  if (header.rfind(kHeader, 0) != 0) {
    throw TemplateError("template '" + template_id + "' must start with '# slots:'");
  }
  std::set<std::string> declared;
  std::stringstream list(header.substr(kHeader.size()));
  std::string name;
  while (std::getline(list, name, ',')) {
    name = trim(name);
    if (name.empty()) continue;
    if (!declared.insert(name).second) {
      throw TemplateError("template '" + template_id + "' declares slot '" + name + "' twice");
    }
  }
  std::set<std::string> used;
  try {
    used = placeholders_in(body);
  } catch (const TemplateError& e) {
    throw TemplateError("template '" + template_id + "': " + e.what());
  }
  if (used != declared) {
    std::set<std::string> undeclared;
    std::set<std::string> unused;
    std::set_difference(used.begin(), used.end(), declared.begin(), declared.end(),
                        std::inserter(undeclared, undeclared.end()));
    std::set_difference(declared.begin(), declared.end(), used.begin(), used.end(),
                        std::inserter(unused, unused.end()));
    throw TemplateError("template '" + template_id + "' slot mismatch; undeclared: [" + join(undeclared) +
                        "], unused: [" + join(unused) + "]");
  }
  return {template_id, body, declared};
}

PromptLibrary::PromptLibrary(std::vector<PromptTemplate> templates) {
  for (auto& t : templates) {
    auto id = t.template_id;
    if (!templates_.emplace(id, std::move(t)).second) {
      throw TemplateError("duplicate template id '" + id + "'");
    }
  }
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw TemplateError("prompt directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PromptTemplate> templates;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    templates.push_back(parse_template(path.stem().string(), buf.str()));
  }
  PromptLibrary library(std::move(templates));
  for (const auto& id : required_template_ids()) {
    if (!library.contains(id)) throw TemplateError("prompt directory is missing template '" + id + "'");
  }
  return library;
}

const PromptTemplate& PromptLibrary::get(const std::string& template_id) const {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) throw TemplateError("unknown template id '" + template_id + "'");
  return it->second;
}

std::string PromptLibrary::render(const std::string& template_id,
                                  const std::map<std::string, std::string>& slots) const {
  const auto& t = get(template_id);
  for (const auto& slot : t.required_slots) {
    if (!slots.contains(slot)) {
      throw TemplateError("template '" + template_id + "' is missing slot '" + slot + "'");
    }
  }
  for (const auto& [name, _] : slots) {
    if (!t.required_slots.contains(name)) {
      log_warning("template '" + template_id + "' ignores extra slot '" + name + "'");
    }
  }
  std::string out;
  for (const auto& piece : tokenize(t.text)) {
    out += piece.kind == PieceKind::Literal ? piece.value : slots.at(piece.value);
  }
  return out;
}

std::vector<std::string> PromptLibrary::catalog() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : templates_) ids.push_back(id);
  return ids;
}

const std::vector<std::string>& required_template_ids() {
  static const std::vector<std::string> ids{
      "classify_intent",      "update_constraints",   "update_verdict_item",  "generate_recommendation_query",
      "explain_recommendations", "determine_qa_source", "answer_from_metadata", "generate_qa_query",
      "answer_from_reviews",  "greeting",             "request_information",  "respond_rejection",
      "respond_acceptance",   "clarify"};
  return ids;
}

}  // namespace rarec
