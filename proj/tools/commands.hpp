#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace rarec::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct IngestArgs {
  std::filesystem::path items;
  std::filesystem::path reviews;
  std::filesystem::path out;
  bool lenient = false;
};

struct IndexArgs {
  std::filesystem::path corpus;
  std::filesystem::path out;
  std::string encoder = "local";
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::string encoder_url;
  std::string encoder_model;
  std::size_t partitions = 0;
  std::optional<std::string> timestamp;
};

struct ServeArgs {
  std::filesystem::path config;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err);
int cmd_index_build(const IndexArgs& args, std::ostream& out, std::ostream& err);
int cmd_chat(const std::filesystem::path& config, std::istream& in, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& config, const std::filesystem::path& script, std::ostream& out,
             std::ostream& err);
int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; usage errors return kExitUsage.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace rarec::cli
