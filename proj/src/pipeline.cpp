#include "mitra/pipeline.hpp"

#include "mitra/error.hpp"

namespace mitra {

RagPipeline::RagPipeline(PipelineConfig config, ModelSet models)
    : config_(std::move(config)), models_(std::move(models)) {
  if (config_.k_final == 0 || config_.k_final > config_.k_retrieve) {
    throw Error(ErrorCode::InvalidArgument, "require 1 <= k_final <= k_retrieve");
  }
  if (!models_.embedder || !models_.reranker || !models_.generator) {
    throw Error(ErrorCode::InvalidArgument, "pipeline needs an embedder, reranker and generator");
  }
}

std::vector<Candidate> RagPipeline::retrieve(const KnowledgeBase& kb, const VectorIndex& index,
                                             std::string_view query) const {
  if (index.empty()) return {};
  const auto qvec = models_.embedder->embed(query, EmbedRole::Query);
  const auto hits = index.search_topk(qvec, config_.k_retrieve);
  std::vector<Candidate> candidates;
  candidates.reserve(hits.size());
  for (const auto& h : hits) {
    const Chunk* chunk = kb.corpus.find_chunk(h.chunk_id);
    if (!chunk) throw Error(ErrorCode::UnknownChunk, "index refers to missing chunk " + h.chunk_id);
    candidates.push_back({h.chunk_id, h.analysis_id, chunk->text, h.score});
  }
  return candidates;
}

std::vector<RankedHit> RagPipeline::ranked_context(const KnowledgeBase& kb, const VectorIndex& index,
                                                   std::string_view query) const {
  const auto candidates = retrieve(kb, index, query);
  if (candidates.empty()) return {};
  return rerank_or_fallback(*models_.reranker, query, candidates, config_.k_final,
                            config_.rerank_fallback);
}

Answer RagPipeline::answer(const KnowledgeBase& kb, std::string_view analysis_id,
                           std::string_view query) const {
  const auto& index = kb.indexes.fulltext_for(analysis_id);
  const auto hits = ranked_context(kb, index, query);

  std::vector<ContextPassage> passages;
  passages.reserve(hits.size());
  for (const auto& h : hits) passages.push_back({h, kb.corpus.find_chunk(h.chunk_id)->text});

  Answer out;
  out.prompt = assemble_prompt(query, passages, config_.generation);
  out.text = models_.generator->generate(out.prompt);
  passages.resize(passages_within_budget(passages, config_.generation));
  for (auto& p : passages) out.citations.push_back({std::move(p.hit), std::move(p.text)});
  return out;
}

}  // namespace mitra
