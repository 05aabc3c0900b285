#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "rarec/error.hpp"
#include "rarec/http_server.hpp"
#include "support/fake_llm.hpp"
#include "support/fixtures.hpp"

using namespace rarec;
using nlohmann::json;
using testing_support::TempDir;

namespace {

// Runs an HttpServer on an ephemeral port for the lifetime of the object.
class RunningServer {
 public:
  explicit RunningServer(std::shared_ptr<SessionManager> sessions, HttpServerOptions options = {})
      : sessions_(std::move(sessions)), server_(sessions_, std::move(options)) {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  SessionManager& sessions() { return *sessions_; }

 private:
  std::shared_ptr<SessionManager> sessions_;
  HttpServer server_;
  int port_ = 0;
  std::thread thread_;
};

struct Fixture {
  TempDir dir;
  std::shared_ptr<const Engine> engine =
      Engine::from_config(ServiceConfig::load(testing_support::write_sample_service(dir.path())));
};

json body_of(const httplib::Result& res) {
  REQUIRE(res);
  return json::parse(res->body);
}

std::string message(const std::string& text) { return json{{"text", text}}.dump(); }

}  // namespace

TEST_CASE("health, session lifecycle and state") {
  Fixture f;
  RunningServer server(std::make_shared<SessionManager>(f.engine));
  auto c = server.client();

  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(body_of(health) == json{{"status", "ok"}, {"index_docs", 72}});

  auto created = c.Post("/api/sessions", "", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  auto session = body_of(created);
  const std::string id = session["session_id"];
  CHECK(id.size() == 32);
  CHECK(session["greeting"].get<std::string>().find("Edmonton restaurant recommender") != std::string::npos);

  auto turn = c.Post("/api/sessions/" + id + "/messages",
                     message("Can you help me find somewhere to eat in downtown Edmonton?"), "application/json");
  REQUIRE(turn);
  CHECK(turn->status == 200);
  CHECK(turn->get_header_value("Content-Type") == "application/json");
  auto result = body_of(turn);
  CHECK(result["action"] == "RequestInformation(cuisine_type)");
  CHECK(result["intents"] == json{"ProvidePreference"});
  CHECK(result["state"]["hard_constraints"]["location"] == json{"downtown Edmonton"});
  CHECK(result["prompt_ids_used"].size() == 6);
  CHECK_FALSE(result.contains("diagnostics"));
  CHECK(turn->body.find(R"("response_text":)") < turn->body.find(R"("action":)"));

  auto rec = body_of(c.Post("/api/sessions/" + id + "/messages", message("Japanese, something like sushi"),
                            "application/json"));
  CHECK(rec["action"] == "RecommendAndExplain");
  CHECK(rec["diagnostics"]["scored_items"][0]["item_id"] == "washoku_bistro");

  auto state = c.Get("/api/sessions/" + id + "/state");
  REQUIRE(state);
  CHECK(state->status == 200);
  CHECK(state->body == serialize(server.sessions().get_state(id)));
  std::vector<std::string> keys;
  auto ordered = nlohmann::ordered_json::parse(state->body);
  for (const auto& [k, _] : ordered.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"hard_constraints", "soft_constraints", "recommended_items", "rejected_items",
                                         "accepted_items"});
  CHECK(ordered["recommended_items"] == json{"washoku_bistro", "tokyo_express"});

  auto del = c.Delete("/api/sessions/" + id);
  REQUIRE(del);
  CHECK(del->status == 204);
  auto gone = c.Get("/api/sessions/" + id + "/state");
  REQUIRE(gone);
  CHECK(gone->status == 404);
  CHECK(body_of(gone)["kind"] == "not_found");
  auto again = c.Delete("/api/sessions/" + id);
  REQUIRE(again);
  CHECK(again->status == 404);
}

TEST_CASE("bad requests") {
  Fixture f;
  RunningServer server(std::make_shared<SessionManager>(f.engine));
  auto c = server.client();
  const std::string id = body_of(c.Post("/api/sessions", "", "application/json"))["session_id"];
  const auto path = "/api/sessions/" + id + "/messages";

  for (const std::string bad : {std::string("not json"), std::string("[]"), std::string("{}"),
                                std::string(R"({"text": 5})"), std::string(R"({"text": "   "})")}) {
    CAPTURE(bad);
    auto res = c.Post(path, bad, "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    auto err = body_of(res);
    CHECK(err["kind"] == "invalid_request");
    CHECK(err["error"].is_string());
  }
  auto unknown = c.Post("/api/sessions/ffff/messages", message("hi"), "application/json");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(server.sessions().transcript(id).empty());
}

TEST_CASE("backend failures map to error statuses and leave the session untouched") {
  Fixture f;
  std::atomic<int> mode{0};
  auto script = f.engine->llm;
  auto llm = std::make_shared<testing_support::FakeLlm>([&](const std::string& p) -> std::string {
    if (p.find("Update the constraints") != std::string::npos) {
      if (mode == 1) throw TransportError("llm unreachable");
      if (mode == 2) throw std::runtime_error("boom");
    }
    return script->complete(LlmRequest::from_prompt(p));
  });
  auto engine = std::make_shared<Engine>(*f.engine);
  engine->llm = llm;
  RunningServer server(std::make_shared<SessionManager>(engine));
  auto c = server.client();
  const std::string id = body_of(c.Post("/api/sessions", "", "application/json"))["session_id"];
  const auto path = "/api/sessions/" + id + "/messages";
  const auto utterance = message("Can you help me find somewhere to eat in downtown Edmonton?");
  const auto before = c.Get("/api/sessions/" + id + "/state")->body;

  mode = 1;
  auto transport = c.Post(path, utterance, "application/json");
  REQUIRE(transport);
  CHECK(transport->status == 502);
  CHECK(body_of(transport)["kind"] == "turn_failed");
  CHECK(body_of(transport)["error"].get<std::string>().find("llm unreachable") != std::string::npos);

  mode = 2;
  auto internal = c.Post(path, utterance, "application/json");
  REQUIRE(internal);
  CHECK(internal->status == 500);
  CHECK(body_of(internal)["kind"] == "internal");

  CHECK(c.Get("/api/sessions/" + id + "/state")->body == before);
  CHECK(server.sessions().transcript(id).empty());

  mode = 0;
  auto ok = c.Post(path, utterance, "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(server.sessions().transcript(id).size() == 1);
}

TEST_CASE("a verdict naming no recommended item is a precondition failure") {
  Fixture f;
  auto script = f.engine->llm;
  auto llm = std::make_shared<testing_support::FakeLlm>([&](const std::string& p) -> std::string {
    if (p.find("has accepted one of the restaurants") != std::string::npos) return "some other place";
    return script->complete(LlmRequest::from_prompt(p));
  });
  auto engine = std::make_shared<Engine>(*f.engine);
  engine->llm = llm;
  RunningServer server(std::make_shared<SessionManager>(engine));
  auto c = server.client();
  const std::string id = body_of(c.Post("/api/sessions", "", "application/json"))["session_id"];
  const auto path = "/api/sessions/" + id + "/messages";
  c.Post(path, message("Can you help me find somewhere to eat in downtown Edmonton?"), "application/json");
  c.Post(path, message("Japanese, something like sushi"), "application/json");
  auto res = c.Post(path, message("The first place looks good!"), "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
  CHECK(body_of(res)["kind"] == "turn_failed");
  CHECK(server.sessions().get_state(id).accepted_items.empty());
}

TEST_CASE("CORS headers and preflight") {
  Fixture f;
  RunningServer server(std::make_shared<SessionManager>(f.engine));
  auto c = server.client();
  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");
  auto pre = c.Options("/api/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  RunningServer closed(std::make_shared<SessionManager>(f.engine), HttpServerOptions{std::nullopt, false});
  auto plain = closed.client().Get("/api/health");
  REQUIRE(plain);
  CHECK_FALSE(plain->has_header("Access-Control-Allow-Origin"));
}

TEST_CASE("not ready and static files") {
  RunningServer idle(std::make_shared<SessionManager>(nullptr));
  auto c = idle.client();
  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 503);
  auto create = c.Post("/api/sessions", "", "application/json");
  REQUIRE(create);
  CHECK(create->status == 503);

  TempDir site;
  testing_support::write_file(site.path() / "index.html", "<html>chat</html>");
  Fixture f;
  RunningServer web(std::make_shared<SessionManager>(f.engine), HttpServerOptions{site.path(), true});
  auto page = web.client().Get("/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body == "<html>chat</html>");
  CHECK(web.client().Get("/api/health")->status == 200);

  CHECK_THROWS_AS(HttpServer(nullptr), PreconditionError);
}
