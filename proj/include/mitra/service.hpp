#pragma once

// Online service: the /v1 JSON API over sessions, analyses, health and
// evaluation, plus the HTTP server that exposes it.

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mitra/config.hpp"
#include "mitra/evalkit.hpp"
#include "mitra/pipeline.hpp"
#include "mitra/session.hpp"
#include "mitra/transport.hpp"

namespace httplib {
class Server;
}

namespace mitra {

/// Limited(Guarded(base)) restricted to the config's allowed endpoints.
/// `base` defaults to an HttpTransport.
std::shared_ptr<Transport> make_transport(const ServiceConfig& config,
                                          std::shared_ptr<Transport> base = nullptr);

ModelSet make_models(const ServiceConfig& config, std::shared_ptr<Transport> transport);

PipelineConfig pipeline_config(const ServiceConfig& config);

/// Loads corpus and tiered indexes named by the config. Throws MissingIndex
/// when the index directory is absent.
std::shared_ptr<const KnowledgeBase> load_knowledge_base(const ServiceConfig& config);

/// UTC ISO-8601 with millisecond precision, e.g. 2026-01-02T03:04:05.678Z.
std::string iso8601(Timestamp t);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<const KnowledgeBase> kb, ModelSet models,
          SessionManager::ClockFn clock = [] { return Clock::now(); });

  /// Routes one request. Never throws; errors become
  /// {"kind": "error", "error_code", "message"} with a 4xx/5xx status.
  ApiResponse dispatch(std::string_view method, std::string_view path, std::string_view body);

  /// Atomically replaces the served corpus and indexes. Sessions locked to
  /// an analysis missing from the new set get MissingIndex on their next query.
  void swap_knowledge_base(std::shared_ptr<const KnowledgeBase> kb);

  SessionManager& sessions() { return sessions_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Served {
    std::shared_ptr<const KnowledgeBase> kb;
    Bm25IndexSet bm25;
  };

  std::shared_ptr<const Served> served() const;

  ApiResponse route(std::string_view method, std::string_view path, const nlohmann::json& body);
  ApiResponse create_session();
  ApiResponse get_session(const std::string& id);
  ApiResponse query(const std::string& id, const nlohmann::json& body);
  ApiResponse confirm_session(const std::string& id, const nlohmann::json& body);
  ApiResponse reset_session(const std::string& id);
  ApiResponse analyses() const;
  ApiResponse health() const;
  ApiResponse run_evaluation(const nlohmann::json& body) const;

  nlohmann::json session_json(const Session& s) const;

  ServiceConfig config_;
  RagPipeline pipeline_;
  SessionManager sessions_;
  mutable std::mutex served_mu_;
  std::shared_ptr<const Served> served_;
};

/// Binds the service to a socket. stop() returns once in-flight requests
/// have drained.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws BindError.
  int bind(const std::string& host, int port);

  /// Blocks serving requests until stop().
  void run();

  void stop();
  void wait_until_ready() const;

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace mitra
