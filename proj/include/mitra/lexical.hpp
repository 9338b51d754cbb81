#pragma once

// Okapi BM25 baseline over chunk-level postings.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mitra/index.hpp"

namespace mitra {

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words stay
/// whole. No stemming, no stop words.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct LexicalDocument {
  std::string chunk_id;
  std::string analysis_id;
  std::string text;
};

class Bm25Index {
 public:
  Bm25Index() = default;
  Bm25Index(std::span<const LexicalDocument> docs, Bm25Params params = {});

  /// ln(1 + (N - n_t + 0.5) / (n_t + 0.5)); zero for terms absent from the corpus.
  double idf(std::string_view term) const;

  /// Throws UnknownChunk when `chunk_id` is not indexed.
  double score(std::span<const std::string> query_terms, std::string_view chunk_id) const;

  /// Top-k by score, zero scores excluded, ties by ascending chunk_id.
  std::vector<RankedHit> rank(std::string_view query, std::size_t k) const;

  std::size_t size() const { return chunk_ids_.size(); }
  double avg_len() const { return avg_len_; }
  std::size_t doc_freq(std::string_view term) const;
  const Bm25Params& params() const { return params_; }

 private:
  struct Posting {
    std::size_t doc;
    std::size_t tf;
  };

  double term_weight(std::size_t tf, std::size_t doc_len) const;

  Bm25Params params_;
  std::vector<std::string> chunk_ids_;
  std::vector<std::string> analysis_ids_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<std::string, std::size_t> doc_pos_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avg_len_ = 0.0;
};

}  // namespace mitra
