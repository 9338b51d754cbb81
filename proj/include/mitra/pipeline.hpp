#pragma once

// Online retrieval path: dense top-k over one analysis, cross-encoder
// rerank, grounded generation.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mitra/corpus.hpp"
#include "mitra/embed.hpp"
#include "mitra/generate.hpp"
#include "mitra/index.hpp"
#include "mitra/rerank.hpp"

namespace mitra {

/// Offline artifacts loaded for serving. Immutable once built.
struct KnowledgeBase {
  CorpusStore corpus;
  TieredIndexSet indexes;
};

struct PipelineConfig {
  std::size_t k_retrieve = 20;
  std::size_t k_final = 5;
  bool rerank_fallback = false;
  GenerationConfig generation;
};

struct ModelSet {
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const Reranker> reranker;
  std::shared_ptr<const Generator> generator;
};

struct Citation {
  RankedHit hit;
  std::string text;
};

struct Answer {
  std::string text;
  std::vector<Citation> citations;
  std::string prompt;
};

class RagPipeline {
 public:
  /// Throws InvalidArgument unless 1 <= k_final <= k_retrieve.
  RagPipeline(PipelineConfig config, ModelSet models);

  /// First stage: the k_retrieve nearest chunks of `index` with their texts.
  std::vector<Candidate> retrieve(const KnowledgeBase& kb, const VectorIndex& index,
                                  std::string_view query) const;

  /// retrieve() then rerank to k_final. Empty when the index is empty.
  std::vector<RankedHit> ranked_context(const KnowledgeBase& kb, const VectorIndex& index,
                                        std::string_view query) const;

  /// Full answer path over the full-text index of `analysis_id`.
  Answer answer(const KnowledgeBase& kb, std::string_view analysis_id, std::string_view query) const;

  const PipelineConfig& config() const { return config_; }
  const ModelSet& models() const { return models_; }

 private:
  PipelineConfig config_;
  ModelSet models_;
};

}  // namespace mitra
