#pragma once

// Rank-aware retrieval evaluation: P@k, R@k, MRR, NDCG@k for the dense
// pipeline and the BM25 baseline over gold-labelled query sets.

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mitra/lexical.hpp"
#include "mitra/pipeline.hpp"

namespace mitra {

enum class QuerySet { Set1, Set2 };

std::string_view query_set_name(QuerySet s);
QuerySet parse_query_set(std::string_view name);

using RelevantSet = std::set<std::string, std::less<>>;

struct GoldQuery {
  std::string query_id;
  std::string analysis_id;
  std::string query_text;
  RelevantSet relevant_chunk_ids;
  QuerySet set_label = QuerySet::Set1;

  bool operator==(const GoldQuery&) const = default;
};

// All metrics take the ranking as chunk ids, best first, without duplicates.

/// |top-k ∩ relevant| / k. The denominator stays k when fewer than k
/// results are returned.
double precision_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k);

/// |top-k ∩ relevant| / |relevant|. Throws EmptyRelevantSet.
double recall_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k);

/// 1 / rank of the first relevant item within the top k, else 0.
double reciprocal_rank(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k);

struct JudgedRanking {
  std::vector<std::string> ranking;
  RelevantSet relevant;
};

/// Mean reciprocal rank over queries at cutoff k. Throws InvalidArgument
/// for an empty query list.
double mrr(std::span<const JudgedRanking> queries, std::size_t k);

/// Binary-gain NDCG: DCG@k / IDCG@k with gain 1/log2(i+1). Throws
/// EmptyRelevantSet.
double ndcg_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k);

struct MetricValues {
  double p1 = 0, r1 = 0, p3 = 0, r3 = 0, p5 = 0, r5 = 0;
  double mrr = 0, ndcg3 = 0, ndcg5 = 0;

  bool operator==(const MetricValues&) const = default;
};

/// All table metrics for one query; `cutoff` bounds the MRR depth.
MetricValues score_ranking(std::span<const std::string> ranking, const RelevantSet& relevant,
                           std::size_t cutoff);

inline constexpr std::string_view kDenseSystem = "dense";
inline constexpr std::string_view kBm25System = "bm25";

struct QueryResult {
  std::string query_id;
  QuerySet set_label = QuerySet::Set1;
  std::string system;
  std::vector<std::string> ranking;
  MetricValues metrics;

  bool operator==(const QueryResult&) const = default;
};

struct SetAggregate {
  std::size_t queries = 0;
  MetricValues mean;

  bool operator==(const SetAggregate&) const = default;
};

struct MetricsReport {
  std::size_t k_retrieve = 0;
  std::size_t k_final = 0;
  std::size_t bm25_depth = 0;
  // system -> set -> aggregate
  std::map<std::string, std::map<QuerySet, SetAggregate>> aggregates;
  std::vector<QueryResult> per_query;

  const SetAggregate& at(std::string_view system, QuerySet set) const;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);

  /// P@k/R@k table followed by the MRR/NDCG table, plain aligned text.
  std::string format_tables() const;

  bool operator==(const MetricsReport&) const = default;
};

using Bm25IndexSet = std::map<std::string, Bm25Index, std::less<>>;

/// One BM25 index per analysis over exactly that analysis' chunks.
Bm25IndexSet build_bm25_indexes(const CorpusStore& corpus, Bm25Params params = {});

struct EvalOptions {
  std::size_t bm25_depth = 5;
};

/// Throws InvalidArgument (no queries), UnknownAnalysis, UnknownChunk
/// (gold chunk missing or owned by another analysis), MissingIndex.
MetricsReport run_eval(const KnowledgeBase& kb, const Bm25IndexSet& bm25,
                       std::span<const GoldQuery> gold, const RagPipeline& pipeline,
                       const EvalOptions& options = {});

/// Line-delimited JSON, one GoldQuery per line.
std::vector<GoldQuery> load_gold(const std::filesystem::path& path);
void save_gold(const std::filesystem::path& path, std::span<const GoldQuery> gold);

nlohmann::json gold_to_json(const GoldQuery& q);
GoldQuery gold_from_json(const nlohmann::json& j);

}  // namespace mitra
