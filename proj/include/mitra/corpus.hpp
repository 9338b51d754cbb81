#pragma once

// Analysis / document / chunk hierarchy and its line-delimited JSON store.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mitra {

struct AnalysisRecord {
  std::string analysis_id;
  std::string title;
  std::string abstract_text;

  bool operator==(const AnalysisRecord&) const = default;
};

struct Document {
  std::string doc_id;
  std::string analysis_id;
  std::string body_text;
  std::int64_t version = 1;

  bool operator==(const Document&) const = default;
};

struct Chunk {
  std::string chunk_id;  // "<doc_id>#<ordinal>"
  std::string analysis_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;

  bool operator==(const Chunk&) const = default;
};

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal);

struct ChunkingOptions {
  // Paragraphs shorter than this many characters (code points) are merged
  // into the following paragraph, or the preceding one when last.
  std::size_t min_paragraph_chars = 20;
};

/// Splits on runs of blank lines after normalizing line endings to "\n".
std::vector<std::string> split_paragraphs(std::string_view body_text,
                                          const ChunkingOptions& options = {});

/// Chunks of `body_text` re-joined with a single blank line.
std::string normalize_body(std::string_view body_text, const ChunkingOptions& options = {});

class CorpusStore {
 public:
  CorpusStore() = default;
  explicit CorpusStore(ChunkingOptions options) : options_(options) {}

  /// Registers or replaces an analysis. The abstract must be non-empty.
  void add_analysis(AnalysisRecord record);

  /// Throws UnknownAnalysis, or StaleVersion when `doc.version` does not
  /// exceed the stored version (the store is left unchanged).
  std::vector<Chunk> ingest_document(Document doc);

  const std::map<std::string, AnalysisRecord, std::less<>>& analyses() const { return analyses_; }
  const std::map<std::string, Document, std::less<>>& documents() const { return documents_; }

  const AnalysisRecord* find_analysis(std::string_view analysis_id) const;
  const Chunk* find_chunk(std::string_view chunk_id) const;

  /// Chunks of one document in ordinal order.
  const std::vector<Chunk>& chunks_of_document(std::string_view doc_id) const;

  /// All chunks of an analysis, ordered by (doc_id, ordinal).
  std::vector<const Chunk*> chunks_of_analysis(std::string_view analysis_id) const;

  /// Every chunk, ordered by (doc_id, ordinal).
  std::vector<const Chunk*> all_chunks() const;

  std::size_t chunk_count() const;

  const ChunkingOptions& chunking() const { return options_; }

  bool operator==(const CorpusStore& other) const {
    return analyses_ == other.analyses_ && documents_ == other.documents_ &&
           chunks_ == other.chunks_;
  }

  /// Throws FormatError describing the first broken reference.
  void check_integrity() const;

 private:
  friend CorpusStore load_corpus(const std::filesystem::path& path);

  ChunkingOptions options_;
  std::map<std::string, AnalysisRecord, std::less<>> analyses_;
  std::map<std::string, Document, std::less<>> documents_;
  std::map<std::string, std::vector<Chunk>, std::less<>> chunks_;  // by doc_id
};

void save_corpus(const CorpusStore& store, const std::filesystem::path& path);
CorpusStore load_corpus(const std::filesystem::path& path);

struct IngestSummary {
  std::size_t analyses = 0;
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::size_t stale = 0;
};

/// Applies an ingestion file: UTF-8 JSON lines with `kind` of "analysis" or
/// "document". Stale document versions are counted and skipped.
IngestSummary ingest_file(CorpusStore& store, const std::filesystem::path& path);

}  // namespace mitra
