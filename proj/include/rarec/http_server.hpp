#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "rarec/service.hpp"

namespace httplib {
class Server;
}

namespace rarec {

struct HttpServerOptions {
  // Serves a static web client from this directory at "/" when set.
  std::optional<std::filesystem::path> static_dir;
  bool allow_cors = true;
};

// JSON API:
//   POST   /api/sessions                 -> {"session_id", "greeting"}
//   POST   /api/sessions/{id}/messages   {"text"} -> TurnResult
//   GET    /api/sessions/{id}/state      -> state
//   DELETE /api/sessions/{id}            -> 204
//   GET    /api/health                   -> {"status": "ok", "index_docs"}
class HttpServer {
 public:
  HttpServer(std::shared_ptr<SessionManager> sessions, HttpServerOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  void install_routes();

  std::shared_ptr<SessionManager> sessions_;
  HttpServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rarec
