#include "mitra/lexical.hpp"

#include <cmath>

#include "mitra/error.hpp"

namespace mitra {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index::Bm25Index(std::span<const LexicalDocument> docs, Bm25Params params) : params_(params) {
  if (params_.k1 < 0.0 || params_.b < 0.0 || params_.b > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "BM25 requires k1 >= 0 and 0 <= b <= 1");
  }
  std::size_t total_len = 0;
  for (const auto& doc : docs) {
    const std::size_t pos = chunk_ids_.size();
    if (!doc_pos_.emplace(doc.chunk_id, pos).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate chunk " + doc.chunk_id);
    }
    chunk_ids_.push_back(doc.chunk_id);
    analysis_ids_.push_back(doc.analysis_id);

    const auto tokens = tokenize(doc.text);
    lengths_.push_back(tokens.size());
    total_len += tokens.size();

    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].push_back({pos, count});
  }
  avg_len_ = chunk_ids_.empty() ? 0.0
                                : static_cast<double>(total_len) / static_cast<double>(chunk_ids_.size());
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(std::string_view term) const {
  const auto n = static_cast<double>(doc_freq(term));
  if (n == 0.0) return 0.0;
  const auto total = static_cast<double>(chunk_ids_.size());
  return std::log(1.0 + (total - n + 0.5) / (n + 0.5));
}

double Bm25Index::term_weight(std::size_t tf, std::size_t doc_len) const {
  const double f = static_cast<double>(tf);
  // avg_len_ is 0 only when every chunk has zero tokens, in which case no
  // term can match and this is never reached.
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_len_;
  return f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double Bm25Index::score(std::span<const std::string> query_terms, std::string_view chunk_id) const {
  auto pos_it = doc_pos_.find(std::string(chunk_id));
  if (pos_it == doc_pos_.end()) {
    throw Error(ErrorCode::UnknownChunk, "chunk " + std::string(chunk_id) + " is not indexed");
  }
  const std::size_t pos = pos_it->second;
  double total = 0.0;
  for (const auto& term : query_terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const auto& p : it->second) {
      if (p.doc == pos) {
        total += idf(term) * term_weight(p.tf, lengths_[pos]);
        break;
      }
    }
  }
  return total;
}

std::vector<RankedHit> Bm25Index::rank(std::string_view query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  // Term-at-a-time accumulation over postings; repeated query terms count
  // once per occurrence, matching score().
  std::unordered_map<std::size_t, double> acc;
  for (const auto& term : tokenize(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) acc[p.doc] += w * term_weight(p.tf, lengths_[p.doc]);
  }
  std::vector<RankedHit> hits;
  hits.reserve(acc.size());
  for (const auto& [doc, s] : acc) {
    if (s > 0.0) hits.push_back({chunk_ids_[doc], analysis_ids_[doc], s, 0});
  }
  finalize_ranking(hits, k);
  return hits;
}

}  // namespace mitra
