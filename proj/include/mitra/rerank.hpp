#pragma once

// Second-stage reranking of first-stage candidates.

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitra/embed.hpp"
#include "mitra/index.hpp"
#include "mitra/synonyms.hpp"

namespace mitra {

class Transport;

struct Candidate {
  std::string chunk_id;
  std::string analysis_id;
  std::string text;
  double first_stage_score = 0.0;
};

struct RerankerConfig {
  ModelMode mode = ModelMode::Stub;
  std::string endpoint_url;
  std::chrono::milliseconds timeout{30'000};
  std::size_t k_final = 5;
  // On RerankerUnavailable, return the first-stage order instead of failing.
  bool fallback_to_first_stage = false;
  std::optional<std::string> synonym_table_path;
};

class Reranker {
 public:
  virtual ~Reranker() = default;

  /// One relevance score per candidate, same order.
  virtual std::vector<double> score(std::string_view query,
                                    std::span<const Candidate> candidates) const = 0;
};

/// Jaccard similarity of canonical token sets.
double stub_score(std::string_view query, std::string_view passage, const SynonymTable& synonyms = {});

class StubReranker final : public Reranker {
 public:
  explicit StubReranker(SynonymTable synonyms = {}) : synonyms_(std::move(synonyms)) {}

  std::vector<double> score(std::string_view query,
                            std::span<const Candidate> candidates) const override;

 private:
  SynonymTable synonyms_;
};

/// POST {"query": ..., "passages": [{"id", "text"}]} -> {"scores": [...]}.
class RemoteReranker final : public Reranker {
 public:
  RemoteReranker(RerankerConfig config, std::shared_ptr<Transport> transport);

  std::vector<double> score(std::string_view query,
                            std::span<const Candidate> candidates) const override;

 private:
  RerankerConfig config_;
  std::shared_ptr<Transport> transport_;
};

/// Scores every candidate with `reranker` and returns the top
/// min(k_final, |candidates|), the reranker score replacing the first-stage
/// score, ties by ascending chunk_id. Throws InvalidArgument for an empty
/// candidate list or k_final == 0.
std::vector<RankedHit> rerank(const Reranker& reranker, std::string_view query,
                              std::span<const Candidate> candidates, std::size_t k_final);

/// rerank(), or the first-stage order truncated to k_final when the reranker
/// is unavailable and `fallback` is set.
std::vector<RankedHit> rerank_or_fallback(const Reranker& reranker, std::string_view query,
                                          std::span<const Candidate> candidates,
                                          std::size_t k_final, bool fallback);

std::unique_ptr<Reranker> make_reranker(const RerankerConfig& config,
                                        std::shared_ptr<Transport> transport);

}  // namespace mitra
