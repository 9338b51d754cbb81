#include "mitra/service.hpp"

#include <ctime>
#include <set>

#include "httplib.h"
#include "mitra/error.hpp"
#include "mitra/simd/kernels.hpp"

namespace mitra {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::QueryBeforeConfirmation:
    case ErrorCode::NotAwaitingConfirmation:
      return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::FormatError:
    case ErrorCode::EmptyQuery:
    case ErrorCode::UnknownAnalysis:
    case ErrorCode::UnknownChunk:
    case ErrorCode::EmptyRelevantSet:
    case ErrorCode::UsageError:
      return 400;
    case ErrorCode::EmbedderUnavailable:
    case ErrorCode::RerankerUnavailable:
    case ErrorCode::GeneratorUnavailable:
    case ErrorCode::TransportUnavailable:
    case ErrorCode::MissingIndex:
    case ErrorCode::EmptyCorpus:
      return 503;
    case ErrorCode::GenerationTimeout:
    case ErrorCode::TransportTimeout:
      return 504;
    default:
      return 500;
  }
}

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, {{"kind", "error"}, {"error_code", code}, {"message", message}}};
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

json hit_json(const RankedHit& h) {
  return {{"rank", h.rank}, {"chunk_id", h.chunk_id}, {"analysis_id", h.analysis_id}, {"score", h.score}};
}

}  // namespace

std::string iso8601(Timestamp t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  long millis = static_cast<long>(ms % 1000);
  if (millis < 0) {
    millis += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const auto n = std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof(buf) - n, ".%03ldZ", millis);
  return buf;
}

std::shared_ptr<Transport> make_transport(const ServiceConfig& config, std::shared_ptr<Transport> base) {
  if (!base) base = std::make_shared<HttpTransport>();
  std::set<std::string> allowed;
  for (const auto& e : config.allowed_endpoints) allowed.insert(parse_url(e).origin());
  auto guarded = std::make_shared<GuardedTransport>(std::move(base), std::move(allowed));
  return std::make_shared<LimitedTransport>(std::move(guarded),
                                            static_cast<std::ptrdiff_t>(config.max_in_flight));
}

ModelSet make_models(const ServiceConfig& config, std::shared_ptr<Transport> transport) {
  auto reranker_config = config.reranker;
  reranker_config.k_final = config.k_final;
  return {make_embedder(config.embedder, transport), make_reranker(reranker_config, transport),
          make_generator(config.generator, transport)};
}

PipelineConfig pipeline_config(const ServiceConfig& config) {
  return {config.k_retrieve, config.k_final, config.reranker.fallback_to_first_stage, config.generator};
}

std::shared_ptr<const KnowledgeBase> load_knowledge_base(const ServiceConfig& config) {
  auto kb = std::make_shared<KnowledgeBase>();
  kb->corpus = load_corpus(config.corpus_path);
  kb->indexes = load_tiered_indexes(config.index_dir);
  for (const auto& [id, index] : kb->indexes.fulltext) {
    if (!kb->corpus.find_analysis(id)) {
      throw Error(ErrorCode::FormatError, "index has analysis " + id + " missing from the corpus");
    }
  }
  for (const auto& [id, a] : kb->corpus.analyses()) {
    if (!kb->indexes.fulltext.contains(id)) {
      throw Error(ErrorCode::MissingIndex, "analysis " + id + " has no index; rerun build-index");
    }
  }
  return kb;
}

Service::Service(ServiceConfig config, std::shared_ptr<const KnowledgeBase> kb, ModelSet models,
                 SessionManager::ClockFn clock)
    : config_(std::move(config)),
      pipeline_(pipeline_config(config_), std::move(models)),
      sessions_(config_.session_idle_expiry, std::move(clock)) {
  swap_knowledge_base(std::move(kb));
}

void Service::swap_knowledge_base(std::shared_ptr<const KnowledgeBase> kb) {
  if (!kb) throw Error(ErrorCode::MissingIndex, "no knowledge base");
  auto served = std::make_shared<Served>();
  served->bm25 = build_bm25_indexes(kb->corpus, config_.bm25);
  served->kb = std::move(kb);
  std::lock_guard lock(served_mu_);
  served_ = std::move(served);
}

std::shared_ptr<const Service::Served> Service::served() const {
  std::lock_guard lock(served_mu_);
  return served_;
}

ApiResponse Service::dispatch(std::string_view method, std::string_view path, std::string_view body) {
  try {
    json parsed = json::object();
    if (!body.empty()) {
      parsed = json::parse(body);
      if (!parsed.is_object()) return error_response(400, "bad_request", "request body must be a JSON object");
    }
    return route(method, path, parsed);
  } catch (const json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

ApiResponse Service::route(std::string_view method, std::string_view path, const json& body) {
  const auto parts = split_path(path);
  if (parts.size() >= 2 && parts[0] == "v1") {
    const auto& resource = parts[1];
    if (resource == "health" && parts.size() == 2 && method == "GET") return health();
    if (resource == "analyses" && parts.size() == 2 && method == "GET") return analyses();
    if (resource == "eval" && parts.size() == 3 && parts[2] == "run" && method == "POST") {
      return run_evaluation(body);
    }
    if (resource == "sessions") {
      if (parts.size() == 2 && method == "POST") return create_session();
      if (parts.size() >= 3) {
        const std::string id(parts[2]);
        if (parts.size() == 3 && method == "GET") return get_session(id);
        if (parts.size() == 4 && method == "POST") {
          if (parts[3] == "query") return query(id, body);
          if (parts[3] == "confirm") return confirm_session(id, body);
          if (parts[3] == "reset") return reset_session(id);
        }
      }
    }
  }
  return error_response(404, "not_found",
                        "no route for " + std::string(method) + " " + std::string(path));
}

json Service::session_json(const Session& s) const {
  json j = {{"kind", "session"},
            {"session_id", s.session_id},
            {"state", state_name(s.state)},
            {"created_at", iso8601(s.created_at)},
            {"last_active", iso8601(s.last_active)}};
  std::visit(overloaded{[](const FreshState&) {},
                        [&](const CandidateProposedState& c) {
                          j["analysis_id"] = c.analysis_id;
                          j["abstract_score"] = c.abstract_score;
                        },
                        [&](const LockedState& l) {
                          j["analysis_id"] = l.analysis_id;
                          if (const auto* a = served()->kb->corpus.find_analysis(l.analysis_id)) {
                            j["title"] = a->title;
                          }
                        }},
             s.state);
  return j;
}

ApiResponse Service::create_session() {
  sessions_.evict_idle();
  return {201, session_json(sessions_.create())};
}

ApiResponse Service::get_session(const std::string& id) {
  return {200, session_json(sessions_.snapshot(id))};
}

ApiResponse Service::query(const std::string& id, const json& body) {
  if (!body.contains("text") || !body.at("text").is_string()) {
    return error_response(400, "bad_request", "body must carry a string field \"text\"");
  }
  const auto text = body.at("text").get<std::string>();
  const auto state = served();
  const auto outcome = sessions_.with_session(id, [&](Session& s, Timestamp now) {
    return handle_query(s, text, *state->kb, pipeline_, now);
  });
  return std::visit(
      overloaded{[](const ConfirmationRequest& c) -> ApiResponse {
                   json alternatives = json::array();
                   for (const auto& a : c.alternatives) {
                     alternatives.push_back({{"analysis_id", a.analysis_id}, {"title", a.title}, {"score", a.score}});
                   }
                   return {200,
                           {{"kind", "confirmation_request"},
                            {"analysis_id", c.analysis_id},
                            {"title", c.title},
                            {"abstract_excerpt", c.abstract_excerpt},
                            {"score", c.score},
                            {"alternatives", std::move(alternatives)}}};
                 },
                 [](const AnswerOutcome& a) -> ApiResponse {
                   json citations = json::array();
                   for (const auto& c : a.citations) {
                     json cj = hit_json(c.hit);
                     cj["text"] = c.text;
                     citations.push_back(std::move(cj));
                   }
                   return {200, {{"kind", "answer"}, {"text", a.text}, {"citations", std::move(citations)}}};
                 },
                 [](const RejectedOutcome& r) -> ApiResponse {
                   return {200, {{"kind", "rejected"}, {"message", r.message}}};
                 }},
      outcome);
}

ApiResponse Service::confirm_session(const std::string& id, const json& body) {
  if (!body.contains("accept") || !body.at("accept").is_boolean()) {
    return error_response(400, "bad_request", "body must carry a boolean field \"accept\"");
  }
  const bool accept = body.at("accept").get<bool>();
  const auto session = sessions_.with_session(id, [&](Session& s, Timestamp now) {
    confirm(s, accept, now);
    return s;
  });
  if (!accept) {
    return {200,
            {{"kind", "rejected"},
             {"message", "Candidate analysis rejected; rephrase your question to search again."},
             {"session", session_json(session)}}};
  }
  return {200, session_json(session)};
}

ApiResponse Service::reset_session(const std::string& id) {
  const auto session = sessions_.with_session(id, [](Session& s, Timestamp now) {
    reset(s, now);
    return s;
  });
  return {200, session_json(session)};
}

ApiResponse Service::analyses() const {
  const auto state = served();
  json list = json::array();
  for (const auto& [id, a] : state->kb->corpus.analyses()) {
    list.push_back({{"analysis_id", id},
                    {"title", a.title},
                    {"abstract_excerpt", excerpt(a.abstract_text, 300)},
                    {"chunks", state->kb->corpus.chunks_of_analysis(id).size()}});
  }
  return {200, {{"kind", "analyses"}, {"analyses", std::move(list)}}};
}

ApiResponse Service::health() const {
  const auto state = served();
  std::size_t fulltext_entries = 0;
  for (const auto& [id, index] : state->kb->indexes.fulltext) fulltext_entries += index.size();
  return {200,
          {{"kind", "health"},
           {"status", "ok"},
           {"analyses", state->kb->corpus.analyses().size()},
           {"documents", state->kb->corpus.documents().size()},
           {"chunks", state->kb->corpus.chunk_count()},
           {"abstracts_index_entries", state->kb->indexes.abstracts.size()},
           {"fulltext_indexes", state->kb->indexes.fulltext.size()},
           {"fulltext_index_entries", fulltext_entries},
           {"sessions", sessions_.size()},
           {"simd", simd::isa_name(simd::active_kernels().isa)}}};
}

ApiResponse Service::run_evaluation(const json& body) const {
  std::vector<GoldQuery> gold;
  if (body.contains("queries")) {
    for (const auto& q : body.at("queries")) gold.push_back(gold_from_json(q));
  } else if (body.contains("gold_path")) {
    gold = load_gold(body.at("gold_path").get<std::string>());
  } else {
    return error_response(400, "bad_request", "body needs \"queries\" or \"gold_path\"");
  }
  const auto state = served();
  EvalOptions options;
  options.bm25_depth = config_.k_final;
  return {200, run_eval(*state->kb, state->bm25, gold, pipeline_, options).to_json()};
}

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  // httplib's default also sets SO_REUSEPORT, which would let a second server
  // share a port that is already taken.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = service_.dispatch(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server_->Get(R"(/.*)", handler);
  server_->Post(R"(/.*)", handler);
  server_->Put(R"(/.*)", handler);
  server_->Delete(R"(/.*)", handler);
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(R"({"kind":"error","error_code":"internal","message":"unhandled exception"})",
                    "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw Error(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace mitra
