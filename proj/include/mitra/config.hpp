#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mitra/embed.hpp"
#include "mitra/generate.hpp"
#include "mitra/lexical.hpp"
#include "mitra/rerank.hpp"

namespace mitra {

struct ServiceConfig {
  std::string listen = "127.0.0.1:8080";
  std::filesystem::path corpus_path = "corpus.jsonl";
  std::filesystem::path index_dir = "index";
  EmbedderConfig embedder;
  RerankerConfig reranker;
  GenerationConfig generator;
  Bm25Params bm25;
  std::size_t k_retrieve = 20;
  std::size_t k_final = 5;
  std::chrono::seconds session_idle_expiry = std::chrono::hours(24);
  std::size_t max_in_flight = 4;
  // Origins ("http://host:port") remote model clients may contact.
  std::vector<std::string> allowed_endpoints;

  /// Checks k_final <= k_retrieve and that every remote endpoint is allowed.
  /// Throws InvalidArgument.
  void validate() const;

  /// Every remote-mode endpoint URL.
  std::vector<std::string> remote_endpoints() const;

  /// Forces all three model boundaries to stub mode.
  void force_stub_models();
};

/// Relative paths inside the document resolve against `base_dir`.
ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Reads and validates a JSON config file. Throws IoError / FormatError.
ServiceConfig load_config(const std::filesystem::path& path);

/// "host:port" split; throws InvalidArgument.
std::pair<std::string, int> parse_listen_address(const std::string& listen);

}  // namespace mitra
