#include "mitra/config.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "mitra/error.hpp"
#include "mitra/transport.hpp"

namespace mitra {

using nlohmann::json;

namespace {

ModelMode parse_mode(const json& j) {
  const auto mode = j.value("mode", std::string("stub"));
  if (mode == "stub") return ModelMode::Stub;
  if (mode == "remote") return ModelMode::Remote;
  throw Error(ErrorCode::FormatError, "model mode must be 'stub' or 'remote', got '" + mode + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::chrono::milliseconds seconds_field(const json& j, const char* key, std::chrono::milliseconds fallback) {
  if (!j.contains(key)) return fallback;
  return std::chrono::milliseconds(static_cast<long long>(j.at(key).get<double>() * 1000.0));
}

}  // namespace

void ServiceConfig::validate() const {
  if (k_final == 0 || k_retrieve == 0) throw Error(ErrorCode::InvalidArgument, "k values must be >= 1");
  if (k_final > k_retrieve) {
    throw Error(ErrorCode::InvalidArgument, "k_final (" + std::to_string(k_final) +
                                                ") must not exceed k_retrieve (" +
                                                std::to_string(k_retrieve) + ")");
  }
  if (embedder.dimension == 0) throw Error(ErrorCode::InvalidArgument, "embedder dimension must be > 0");
  if (generator.max_context_chars == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_context_chars must be > 0");
  }
  std::set<std::string> allowed;
  for (const auto& e : allowed_endpoints) allowed.insert(parse_url(e).origin());
  for (const auto& url : remote_endpoints()) {
    if (!allowed.contains(parse_url(url).origin())) {
      throw Error(ErrorCode::InvalidArgument,
                  "remote endpoint " + url + " is not in allowed_endpoints");
    }
  }
  parse_listen_address(listen);
}

std::vector<std::string> ServiceConfig::remote_endpoints() const {
  std::vector<std::string> out;
  if (embedder.mode == ModelMode::Remote) out.push_back(embedder.endpoint_url);
  if (reranker.mode == ModelMode::Remote) out.push_back(reranker.endpoint_url);
  if (generator.mode == ModelMode::Remote) out.push_back(generator.endpoint_url);
  return out;
}

void ServiceConfig::force_stub_models() {
  embedder.mode = ModelMode::Stub;
  reranker.mode = ModelMode::Stub;
  generator.mode = ModelMode::Stub;
}

ServiceConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ServiceConfig c;
  try {
    c.listen = j.value("listen", c.listen);
    if (j.contains("corpus_path")) c.corpus_path = resolve(base_dir, j.at("corpus_path").get<std::string>());
    else c.corpus_path = resolve(base_dir, c.corpus_path.string());
    if (j.contains("index_dir")) c.index_dir = resolve(base_dir, j.at("index_dir").get<std::string>());
    else c.index_dir = resolve(base_dir, c.index_dir.string());
    c.k_retrieve = j.value("k_retrieve", c.k_retrieve);
    c.k_final = j.value("k_final", c.k_final);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (j.contains("session_idle_expiry_s")) {
      c.session_idle_expiry = std::chrono::seconds(j.at("session_idle_expiry_s").get<long long>());
    }
    c.allowed_endpoints = j.value("allowed_endpoints", std::vector<std::string>{});

    const json e = j.value("embedder", json::object());
    c.embedder.mode = parse_mode(e);
    c.embedder.endpoint_url = e.value("endpoint_url", std::string{});
    c.embedder.dimension = e.value("dimension", kDefaultDimension);
    c.embedder.stub_seed = e.value("stub_seed", std::uint64_t{0});
    c.embedder.max_batch = e.value("max_batch", std::size_t{32});
    c.embedder.timeout = seconds_field(e, "timeout_s", c.embedder.timeout);
    if (e.contains("synonym_table_path") && !e.at("synonym_table_path").is_null()) {
      c.embedder.synonym_table_path = resolve(base_dir, e.at("synonym_table_path").get<std::string>()).string();
    }

    const json r = j.value("reranker", json::object());
    c.reranker.mode = parse_mode(r);
    c.reranker.endpoint_url = r.value("endpoint_url", std::string{});
    c.reranker.timeout = seconds_field(r, "timeout_s", c.reranker.timeout);
    c.reranker.fallback_to_first_stage = r.value("fallback_to_first_stage", false);
    if (r.contains("synonym_table_path") && !r.at("synonym_table_path").is_null()) {
      c.reranker.synonym_table_path = resolve(base_dir, r.at("synonym_table_path").get<std::string>()).string();
    }

    const json g = j.value("generator", json::object());
    c.generator.mode = parse_mode(g);
    c.generator.endpoint_url = g.value("endpoint_url", std::string{});
    c.generator.model_name = g.value("model_name", c.generator.model_name);
    c.generator.max_context_chars = g.value("max_context_chars", c.generator.max_context_chars);
    c.generator.timeout = seconds_field(g, "timeout_s", c.generator.timeout);

    const json b = j.value("bm25", json::object());
    c.bm25.k1 = b.value("k1", c.bm25.k1);
    c.bm25.b = b.value("b", c.bm25.b);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::FormatError, std::string("bad config: ") + ex.what());
  }
  c.reranker.k_final = c.k_final;
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::pair<std::string, int> parse_listen_address(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::InvalidArgument, "listen address must be host:port, got '" + listen + "'");
  }
  int port = -1;
  const char* first = listen.data() + colon + 1;
  const char* last = listen.data() + listen.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad port in listen address '" + listen + "'");
  }
  return {listen.substr(0, colon), port};
}

}  // namespace mitra
