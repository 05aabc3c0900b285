#include "commands.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "rarec/error.hpp"
#include "rarec/http_server.hpp"
#include "rarec/service.hpp"
#include "rarec/text_util.hpp"

namespace rarec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
  if (!out) throw ValidationError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path.string() + " is not valid JSON");
  return j;
}

std::shared_ptr<SessionManager> open_sessions(const fs::path& config_path) {
  const auto config = ServiceConfig::load(config_path);
  return std::make_shared<SessionManager>(Engine::from_config(config), config.transcript_dir);
}

// Runs a command body, mapping library errors onto exit code 1.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

bool values_subset(const json& expected, const json& actual) {
  if (!expected.is_array()) return expected == actual;
  if (!actual.is_array()) return false;
  for (const auto& v : expected) {
    if (std::find(actual.begin(), actual.end(), v) == actual.end()) return false;
  }
  return true;
}

// Expected constraint values and list entries must all appear in the actual
// state; anything not mentioned is ignored.
std::optional<std::string> check_state_contains(const json& expected, const json& actual) {
  if (!expected.is_object()) return "state_contains must be an object";
  for (const auto& [key, want] : expected.items()) {
    if (!actual.contains(key)) return "state has no key '" + key + "'";
    const auto& have = actual[key];
    if (want.is_object()) {
      for (const auto& [subkey, values] : want.items()) {
        const json got = have.contains(subkey) ? have[subkey] : json::array();
        if (!values_subset(values, got)) {
          return key + "." + subkey + ": expected " + values.dump() + " within " + got.dump();
        }
      }
    } else if (!values_subset(want, have)) {
      return key + ": expected " + want.dump() + " within " + have.dump();
    }
  }
  return std::nullopt;
}

std::vector<std::string> check_turn(const json& expect, const TurnResult& result, const StateSchema& schema) {
  std::vector<std::string> failures;
  if (expect.contains("intents")) {
    std::set<std::string> want, got;
    for (const auto& name : expect["intents"]) want.insert(name.get<std::string>());
    for (const auto& name : result.intents.names()) got.insert(name);
    if (want != got) {
      failures.push_back("intents: expected " + json(want).dump() + ", got " + json(got).dump());
    }
  }
  if (expect.contains("action")) {
    const auto want = expect["action"].get<std::string>();
    const auto got = to_string(result.action);
    const bool bare = want.find('(') == std::string::npos;
    if (want != got && !(bare && want == to_string(result.action.kind))) {
      failures.push_back("action: expected " + want + ", got " + got);
    }
  }
  const json state = json::parse(serialize(result.state));
  if (expect.contains("state_contains")) {
    if (auto why = check_state_contains(expect["state_contains"], state)) failures.push_back("state: " + *why);
  }
  if (expect.contains("state_equals")) {
    const auto want = state_from_json(schema, expect["state_equals"]);
    if (want != result.state) {
      failures.push_back("state: expected " + serialize(want) + ", got " + serialize(result.state));
    }
  }
  if (expect.contains("response_contains")) {
    const auto want = expect["response_contains"].get<std::string>();
    if (result.response_text.find(want) == std::string::npos) {
      failures.push_back("response: \"" + want + "\" not found in \"" + result.response_text + "\"");
    }
  }
  return failures;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* server = g_server.load()) server->stop();
}

}  // namespace

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto items = load_items(args.items.string());
    std::set<std::string> ids;
    for (const auto& item : items) ids.insert(item.item_id);
    const auto reviews =
        load_reviews(args.reviews.string(), ids, args.lenient ? OrphanMode::Lenient : OrphanMode::Strict);
    // Fails on doc_id collisions before anything is written.
    build_documents(items, reviews.reviews);

    fs::create_directories(args.out);
    std::ostringstream items_text, reviews_text;
    write_items(items_text, items);
    write_reviews(reviews_text, reviews.reviews);
    write_file(args.out / "items.jsonl", items_text.str());
    write_file(args.out / "reviews.jsonl", reviews_text.str());
    write_file(args.out / "skips.json", skip_report_json(reviews.skipped).dump(2) + "\n");

    out << items.size() << " items, " << reviews.reviews.size() << " reviews, " << reviews.skipped.size()
        << " skipped\n";
    for (const auto& s : reviews.skipped) out << "skipped " << s.review_id << ": " << s.reason << "\n";
    return kExitOk;
  });
}

int cmd_index_build(const IndexArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::is_directory(args.corpus)) throw ValidationError("corpus directory " + args.corpus.string() + " not found");
    const auto items = load_items((args.corpus / "items.jsonl").string());
    std::set<std::string> ids;
    for (const auto& item : items) ids.insert(item.item_id);
    const auto reviews = load_reviews((args.corpus / "reviews.jsonl").string(), ids);
    const auto docs = build_documents(items, reviews.reviews);

    json encoder_config;
    if (args.encoder == "local") {
      encoder_config = {{"provider", "local"}, {"dim", args.dim}, {"seed", args.seed}};
    } else if (args.encoder == "remote") {
      if (args.encoder_url.empty()) throw ValidationError("--encoder remote needs --encoder-url");
      encoder_config = {{"provider", "remote"}, {"base_url", args.encoder_url}};
      if (!args.encoder_model.empty()) encoder_config["model"] = args.encoder_model;
    } else {
      throw ValidationError("unknown encoder '" + args.encoder + "'");
    }
    const auto encoder = make_embedding_provider(encoder_config);

    BuildOptions options;
    options.build_timestamp = args.timestamp;
    auto index = build_index(docs, *encoder, options);
    if (args.partitions > 0) index = with_partitions(index, {args.partitions, 10, args.seed});

    save_index(index, args.out);
    std::ostringstream items_text;
    write_items(items_text, items);
    write_file(args.out / "items.jsonl", items_text.str());

    out << "indexed " << index.size() << " documents (" << items.size() << " items, " << reviews.reviews.size()
        << " reviews), dim " << index.dim() << ", encoder " << index.manifest().provider_id << "\n";
    return kExitOk;
  });
}

int cmd_chat(const fs::path& config, std::istream& in, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto sessions = open_sessions(config);
    const auto created = sessions->create_session();
    out << "assistant> " << created.greeting << "\n";
    std::string line;
    while (true) {
      out << "you> " << std::flush;
      if (!std::getline(in, line)) break;
      line = trim(line);
      if (line.empty()) continue;
      if (line == "/quit") break;
      if (line == "/state") {
        out << to_json(sessions->get_state(created.session_id)).dump(2) << "\n";
        continue;
      }
      try {
        const auto result = sessions->process_turn(created.session_id, line);
        out << "assistant> " << result.response_text << "\n";
      } catch (const Error& e) {
        err << "turn failed: " << e.what() << "\n";
      }
    }
    out << "\n";
    return kExitOk;
  });
}

int cmd_eval(const fs::path& config, const fs::path& script, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto doc = read_json_file(script);
    const json turns = doc.is_array() ? doc : doc.value("turns", json::array());
    if (!turns.is_array() || turns.empty()) throw ValidationError("eval script has no turns");
    for (const auto& t : turns) {
      if (!t.is_object() || !t.contains("utterance") || !t["utterance"].is_string()) {
        throw ValidationError("every eval turn needs a string 'utterance'");
      }
    }

    auto sessions = open_sessions(config);
    const auto created = sessions->create_session();
    std::size_t failed = 0;
    if (doc.is_object() && doc.contains("greeting_contains")) {
      const auto want = doc["greeting_contains"].get<std::string>();
      const bool ok = created.greeting.find(want) != std::string::npos;
      out << "greeting: " << (ok ? "PASS" : "FAIL") << "\n";
      if (!ok) {
        out << "  response: \"" << want << "\" not found in \"" << created.greeting << "\"\n";
        ++failed;
      }
    }

    const auto& schema = sessions->engine().schema;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto& turn = turns[i];
      std::vector<std::string> failures;
      try {
        const auto result = sessions->process_turn(created.session_id, turn["utterance"].get<std::string>());
        failures = check_turn(turn.value("expect", json::object()), result, schema);
      } catch (const std::exception& e) {
        failures.push_back(std::string("turn raised: ") + e.what());
      }
      out << "turn " << (i + 1) << ": " << (failures.empty() ? "PASS" : "FAIL") << "\n";
      for (const auto& f : failures) out << "  " << f << "\n";
      if (!failures.empty()) ++failed;
    }
    const std::size_t total = turns.size() + (doc.is_object() && doc.contains("greeting_contains") ? 1 : 0);
    out << (total - failed) << "/" << total << " checks passed\n";
    return failed == 0 ? kExitOk : kExitFailure;
  });
}

int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    HttpServerOptions options;
    options.static_dir = args.static_dir;
    HttpServer server(open_sessions(args.config), options);
    g_server = &server;
    std::signal(SIGINT, handle_stop_signal);
    std::signal(SIGTERM, handle_stop_signal);
    out << "listening on http://" << args.host << ":" << args.port << "\n" << std::flush;
    const bool ok = server.listen(args.host, args.port);
    g_server = nullptr;
    if (!ok && !server.is_running()) {
      err << "error: could not listen on " << args.host << ":" << args.port << "\n";
      return kExitFailure;
    }
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Review-augmented conversational restaurant recommender"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize an items/reviews corpus");
  ingest_cmd->add_option("--items", ingest.items, "items JSONL")->required();
  ingest_cmd->add_option("--reviews", ingest.reviews, "reviews JSONL")->required();
  ingest_cmd->add_option("--out", ingest.out, "output corpus directory")->required();
  ingest_cmd->add_flag("--lenient", ingest.lenient, "skip reviews of unknown items instead of failing");

  IndexArgs index;
  auto* index_cmd = app.add_subcommand("index", "Index operations");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "Embed a corpus directory into an index directory");
  build_cmd->add_option("--corpus", index.corpus, "corpus directory from ingest")->required();
  build_cmd->add_option("--out", index.out, "index directory")->required();
  build_cmd->add_option("--encoder", index.encoder, "local or remote")->check(CLI::IsMember({"local", "remote"}));
  build_cmd->add_option("--dim", index.dim, "local encoder dimension");
  build_cmd->add_option("--seed", index.seed, "local encoder and partitioning seed");
  build_cmd->add_option("--encoder-url", index.encoder_url, "remote encoder base URL");
  build_cmd->add_option("--encoder-model", index.encoder_model, "remote encoder model name");
  build_cmd->add_option("--partitions", index.partitions, "build an IVF layout with this many partitions");
  build_cmd->add_option("--timestamp", index.timestamp, "build timestamp to record in the manifest");

  fs::path chat_config;
  auto* chat_cmd = app.add_subcommand("chat", "Interactive terminal conversation");
  chat_cmd->add_option("--config", chat_config, "service config JSON")->required();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--config", serve.config, "service config JSON")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port")->required();
  serve_cmd->add_option("--host", serve.host, "bind address");
  serve_cmd->add_option("--static", serve.static_dir, "directory with a static web client");

  fs::path eval_config, eval_script;
  auto* eval_cmd = app.add_subcommand("eval", "Replay a scripted conversation and check expectations");
  eval_cmd->add_option("--config", eval_config, "service config JSON")->required();
  eval_cmd->add_option("--script", eval_script, "eval script JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (*ingest_cmd) return cmd_ingest(ingest, out, err);
  if (*build_cmd) return cmd_index_build(index, out, err);
  if (*chat_cmd) return cmd_chat(chat_config, in, out, err);
  if (*serve_cmd) return cmd_serve(serve, out, err);
  if (*eval_cmd) return cmd_eval(eval_config, eval_script, out, err);
  return kExitUsage;
}

}  // namespace rarec::cli
