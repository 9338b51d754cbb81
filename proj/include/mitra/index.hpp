#pragma once

// Exact cosine top-k search and the two-tier (abstracts / per-analysis
// full text) index set.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace mitra {

class CorpusStore;
class Embedder;
class EmbeddingVector;

struct RankedHit {
  std::string chunk_id;
  std::string analysis_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RankedHit&) const = default;
};

/// Orders hits by descending score, then ascending chunk_id, and assigns
/// contiguous 1-based ranks. Keeps at most `k`.
void finalize_ranking(std::vector<RankedHit>& hits, std::size_t k);

/// Flat exact-search index over unit vectors stored as float32.
class VectorIndex {
 public:
  VectorIndex() = default;
  explicit VectorIndex(std::size_t dimension) : dimension_(dimension) {}

  /// Throws DimensionMismatch, or InvalidArgument on a duplicate id.
  void add(std::string chunk_id, std::string analysis_id, const EmbeddingVector& vec);
  void add(std::string chunk_id, std::string analysis_id, std::span<const float> vec);

  /// The min(k, size()) entries with the highest dot product, descending,
  /// ties by ascending chunk_id. Throws DimensionMismatch, InvalidArgument
  /// for k == 0.
  std::vector<RankedHit> search_topk(const EmbeddingVector& query, std::size_t k) const;
  std::vector<RankedHit> search_topk(std::span<const float> query, std::size_t k) const;

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string& chunk_id(std::size_t i) const { return ids_[i]; }
  const std::string& analysis_id(std::size_t i) const { return analysis_ids_[i]; }
  std::span<const float> vector(std::size_t i) const {
    return {matrix_.data() + i * dimension_, dimension_};
  }

  bool operator==(const VectorIndex& other) const {
    return dimension_ == other.dimension_ && ids_ == other.ids_ &&
           analysis_ids_ == other.analysis_ids_ && matrix_ == other.matrix_;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::string> analysis_ids_;
  std::vector<float> matrix_;  // row-major, size() x dimension_
  std::unordered_set<std::string> id_set_;
};

/// Binary layout, all integers little-endian:
///   magic "MTRAIDX1" | u32 version | u32 dimension | u64 count
///   count x { u32 len | chunk_id | u32 len | analysis_id | dimension x f32 }
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

std::vector<float> to_float32(const EmbeddingVector& vec);

struct TieredIndexSet {
  VectorIndex abstracts;                        // chunk_id == analysis_id
  std::map<std::string, VectorIndex, std::less<>> fulltext;  // keyed by analysis_id

  /// Throws MissingIndex for an analysis without a full-text index.
  const VectorIndex& fulltext_for(std::string_view analysis_id) const;

  /// Throws FormatError if abstracts and full-text key sets differ.
  void check_consistency() const;
};

/// One entry per analysis, embedding its abstract. Throws EmptyCorpus.
VectorIndex build_abstracts_index(const CorpusStore& store, const Embedder& embedder);

/// One entry per chunk of the analysis. Throws UnknownAnalysis.
VectorIndex build_fulltext_index(const CorpusStore& store, std::string_view analysis_id,
                                 const Embedder& embedder);

TieredIndexSet build_tiered_indexes(const CorpusStore& store, const Embedder& embedder);

/// Directory with abstracts.idx, one fulltext_NNNN.idx per analysis, and a
/// manifest.json mapping analysis ids to files.
void save_tiered_indexes(const TieredIndexSet& set, const std::filesystem::path& dir);
TieredIndexSet load_tiered_indexes(const std::filesystem::path& dir);

}  // namespace mitra
