#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rarec/corpus.hpp"
#include "rarec/embedding.hpp"
#include "rarec/retrieval.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(RAREC_SOURCE_DIR); }
inline fs::path sample_dir() { return source_dir() / "sample"; }
inline fs::path prompts_dir() { return source_dir() / "prompts"; }

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("rarec-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::vector<rarec::ItemRecord> sample_items() {
  return rarec::load_items((sample_dir() / "items.jsonl").string());
}

inline std::vector<rarec::ReviewRecord> sample_reviews() {
  std::set<std::string> ids;
  for (const auto& i : sample_items()) ids.insert(i.item_id);
  return rarec::load_reviews((sample_dir() / "reviews.jsonl").string(), ids).reviews;
}

inline rarec::ReviewIndex sample_index() {
  rarec::LocalHashEmbedding enc(64, 0);
  rarec::BuildOptions opts;
  opts.build_timestamp = "2024-01-01T00:00:00Z";
  return rarec::build_index(rarec::build_documents(sample_items(), sample_reviews()), enc, opts);
}

// Writes the sample index plus a service config into dir and returns the
// config path. `llm` overrides the scripted backend when given.
inline fs::path write_sample_service(const fs::path& dir, const nlohmann::json& llm = nullptr) {
  const auto index_dir = dir / "index";
  rarec::save_index(sample_index(), index_dir);
  std::ofstream items(index_dir / "items.jsonl", std::ios::binary);
  rarec::write_items(items, sample_items());
  items.close();
  nlohmann::json config = {
      {"index_dir", index_dir.string()},
      {"prompts_dir", prompts_dir().string()},
      {"llm", llm.is_null() ? nlohmann::json{{"backend", "scripted"}, {"script_file", (sample_dir() / "script.json").string()}}
                            : llm},
      {"encoder", {{"provider", "local"}, {"dim", 64}, {"seed", 0}}},
      {"k", 2},
      {"m", 5},
      {"qa_reviews_per_item", 3}};
  const auto path = dir / "config.json";
  write_file(path, config.dump(2));
  return path;
}

}  // namespace testing_support
