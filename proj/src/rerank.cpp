#include "mitra/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "mitra/error.hpp"
#include "mitra/transport.hpp"

namespace mitra {

using nlohmann::json;

double stub_score(std::string_view query, std::string_view passage, const SynonymTable& synonyms) {
  const auto q = canonical_tokens(query, synonyms);
  const auto p = canonical_tokens(passage, synonyms);
  const std::set<std::string> qs(q.begin(), q.end());
  const std::set<std::string> ps(p.begin(), p.end());
  if (qs.empty() && ps.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : qs) shared += ps.count(t);
  const std::size_t unioned = qs.size() + ps.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(unioned);
}

std::vector<double> StubReranker::score(std::string_view query,
                                        std::span<const Candidate> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(stub_score(query, c.text, synonyms_));
  return out;
}

RemoteReranker::RemoteReranker(RerankerConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "remote reranker needs a transport");
}

std::vector<double> RemoteReranker::score(std::string_view query,
                                          std::span<const Candidate> candidates) const {
  json passages = json::array();
  for (const auto& c : candidates) passages.push_back({{"id", c.chunk_id}, {"text", c.text}});
  const json request = {{"query", query}, {"passages", std::move(passages)}};

  HttpReply reply;
  try {
    reply = transport_->post_json(parse_url(config_.endpoint_url), request.dump(), config_.timeout);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ForbiddenEndpoint || e.code() == ErrorCode::InvalidArgument) throw;
    throw Error(ErrorCode::RerankerUnavailable, std::string("reranker server: ") + e.what());
  }
  if (reply.status != 200) {
    throw Error(ErrorCode::RerankerUnavailable,
                "reranker server returned HTTP " + std::to_string(reply.status));
  }
  std::vector<double> scores;
  try {
    scores = json::parse(reply.body).at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::RerankerUnavailable, std::string("malformed reranker response: ") + e.what());
  }
  if (scores.size() != candidates.size()) {
    throw Error(ErrorCode::RerankerUnavailable, "reranker returned " + std::to_string(scores.size()) +
                                                    " scores for " +
                                                    std::to_string(candidates.size()) + " passages");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::RerankerUnavailable, "non-finite reranker score");
  }
  return scores;
}

std::vector<RankedHit> rerank(const Reranker& reranker, std::string_view query,
                              std::span<const Candidate> candidates, std::size_t k_final) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "rerank needs at least one candidate");
  if (k_final == 0) throw Error(ErrorCode::InvalidArgument, "k_final must be >= 1");
  const auto scores = reranker.score(query, candidates);
  std::vector<RankedHit> hits;
  hits.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    hits.push_back({candidates[i].chunk_id, candidates[i].analysis_id, scores[i], 0});
  }
  finalize_ranking(hits, k_final);
  return hits;
}

std::vector<RankedHit> rerank_or_fallback(const Reranker& reranker, std::string_view query,
                                          std::span<const Candidate> candidates,
                                          std::size_t k_final, bool fallback) {
  try {
    return rerank(reranker, query, candidates, k_final);
  } catch (const Error& e) {
    if (!fallback || e.code() != ErrorCode::RerankerUnavailable) throw;
  }
  std::vector<RankedHit> hits;
  for (const auto& c : candidates) hits.push_back({c.chunk_id, c.analysis_id, c.first_stage_score, 0});
  finalize_ranking(hits, k_final);
  return hits;
}

std::unique_ptr<Reranker> make_reranker(const RerankerConfig& config,
                                        std::shared_ptr<Transport> transport) {
  if (config.mode == ModelMode::Remote) {
    return std::make_unique<RemoteReranker>(config, std::move(transport));
  }
  SynonymTable synonyms;
  if (config.synonym_table_path) synonyms = SynonymTable::load(*config.synonym_table_path);
  return std::make_unique<StubReranker>(std::move(synonyms));
}

}  // namespace mitra
