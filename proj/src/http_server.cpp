#include "rarec/http_server.hpp"

#include "httplib.h"
#include "rarec/error.hpp"
#include "rarec/text_util.hpp"

namespace rarec {

using nlohmann::json;

namespace {

template <typename Json>
void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  send_json(res, status, json{{"error", message}, {"kind", kind}});
}

// Maps library errors onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, "invalid_request", e.what());
  } catch (const PreconditionError& e) {
    send_error(res, 422, "turn_failed", e.what());
  } catch (const Error& e) {
    send_error(res, 502, "turn_failed", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<SessionManager> sessions, HttpServerOptions options)
    : sessions_(std::move(sessions)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (!sessions_) throw PreconditionError("HttpServer needs a session manager");
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  if (options_.allow_cors) {
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
  if (options_.static_dir) s.set_mount_point("/", options_.static_dir->string());

  s.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    if (!sessions_->ready()) {
      send_json(res, 503, json{{"status", "not_ready"}});
      return;
    }
    send_json(res, 200, json{{"status", "ok"}, {"index_docs", sessions_->engine().index->size()}});
  });

  s.Post("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
    if (!sessions_->ready()) {
      send_error(res, 503, "not_ready", "service is not ready");
      return;
    }
    guarded(res, [&] {
      auto created = sessions_->create_session();
      send_json(res, 201, json{{"session_id", created.session_id}, {"greeting", created.greeting}});
    });
  });

  s.Post(R"(/api/sessions/([0-9a-zA-Z]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      auto body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
        throw ValidationError("request body must be {\"text\": string}");
      }
      const auto text = body["text"].get<std::string>();
      if (trim(text).empty()) throw ValidationError("text must not be empty");
      send_json(res, 200, sessions_->process_turn(id, text).to_json());
    });
  });

  s.Get(R"(/api/sessions/([0-9a-zA-Z]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(serialize(sessions_->get_state(req.matches[1])), "application/json");
    });
  });

  s.Delete(R"(/api/sessions/([0-9a-zA-Z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      sessions_->delete_session(req.matches[1]);
      res.status = 204;
    });
  });
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::is_running() const { return server_->is_running(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace rarec
