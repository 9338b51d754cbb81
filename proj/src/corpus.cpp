#include "mitra/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mitra/error.hpp"

namespace mitra {

using nlohmann::json;

namespace {

constexpr int kCorpusFormat = 1;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

const std::vector<Chunk>& empty_chunks() {
  static const std::vector<Chunk> empty;
  return empty;
}

json to_json(const AnalysisRecord& a) {
  return {{"kind", "analysis"},
          {"analysis_id", a.analysis_id},
          {"title", a.title},
          {"abstract_text", a.abstract_text}};
}

json to_json(const Document& d) {
  return {{"kind", "document"},
          {"doc_id", d.doc_id},
          {"analysis_id", d.analysis_id},
          {"version", d.version},
          {"body_text", d.body_text}};
}

json to_json(const Chunk& c) {
  return {{"kind", "chunk"},     {"chunk_id", c.chunk_id}, {"analysis_id", c.analysis_id},
          {"doc_id", c.doc_id},  {"ordinal", c.ordinal},   {"text", c.text}};
}

AnalysisRecord analysis_from_json(const json& j) {
  return {j.at("analysis_id").get<std::string>(), j.value("title", std::string{}),
          j.at("abstract_text").get<std::string>()};
}

Document document_from_json(const json& j) {
  return {j.at("doc_id").get<std::string>(), j.at("analysis_id").get<std::string>(),
          j.at("body_text").get<std::string>(), j.value("version", std::int64_t{1})};
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
  std::string id(doc_id);
  id += '#';
  id += std::to_string(ordinal);
  return id;
}

std::vector<std::string> split_paragraphs(std::string_view body_text,
                                          const ChunkingOptions& options) {
  const std::string text = normalize_newlines(body_text);

  std::vector<std::string> paragraphs;
  std::string current;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) paragraphs.emplace_back(t);
    current.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (trim(line).empty()) {
      flush();
    } else {
      if (!current.empty()) current.push_back('\n');
      current.append(line);
    }
    pos = end + 1;
  }
  flush();

  std::vector<std::string> chunks;
  std::string pending;
  for (auto& p : paragraphs) {
    std::string merged = pending.empty() ? std::move(p) : pending + "\n" + p;
    pending.clear();
    if (code_points(merged) < options.min_paragraph_chars) {
      pending = std::move(merged);
      continue;
    }
    chunks.push_back(std::move(merged));
  }
  if (!pending.empty()) {
    if (chunks.empty()) {
      chunks.push_back(std::move(pending));
    } else {
      chunks.back() += "\n" + pending;
    }
  }
  return chunks;
}

std::string normalize_body(std::string_view body_text, const ChunkingOptions& options) {
  std::string out;
  for (const auto& chunk : split_paragraphs(body_text, options)) {
    if (!out.empty()) out += "\n\n";
    out += chunk;
  }
  return out;
}

void CorpusStore::add_analysis(AnalysisRecord record) {
  if (record.analysis_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "analysis_id must be non-empty");
  }
  if (trim(record.abstract_text).empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "analysis " + record.analysis_id + " has an empty abstract");
  }
  std::string key = record.analysis_id;
  analyses_.insert_or_assign(std::move(key), std::move(record));
}

std::vector<Chunk> CorpusStore::ingest_document(Document doc) {
  if (doc.doc_id.empty()) throw Error(ErrorCode::InvalidArgument, "doc_id must be non-empty");
  if (!analyses_.contains(doc.analysis_id)) {
    throw Error(ErrorCode::UnknownAnalysis,
                "document " + doc.doc_id + " references unknown analysis " + doc.analysis_id);
  }
  if (auto it = documents_.find(doc.doc_id); it != documents_.end() &&
                                             doc.version <= it->second.version) {
    throw Error(ErrorCode::StaleVersion, "document " + doc.doc_id + " version " +
                                             std::to_string(doc.version) + " is not newer than " +
                                             std::to_string(it->second.version));
  }

  std::vector<Chunk> created;
  const auto texts = split_paragraphs(doc.body_text, options_);
  created.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    created.push_back({make_chunk_id(doc.doc_id, i), doc.analysis_id, doc.doc_id, i, texts[i]});
  }
  chunks_.insert_or_assign(doc.doc_id, created);
  std::string key = doc.doc_id;
  documents_.insert_or_assign(std::move(key), std::move(doc));
  return created;
}

const AnalysisRecord* CorpusStore::find_analysis(std::string_view analysis_id) const {
  auto it = analyses_.find(analysis_id);
  return it == analyses_.end() ? nullptr : &it->second;
}

const Chunk* CorpusStore::find_chunk(std::string_view chunk_id) const {
  const auto hash = chunk_id.rfind('#');
  if (hash == std::string_view::npos) return nullptr;
  auto it = chunks_.find(chunk_id.substr(0, hash));
  if (it == chunks_.end()) return nullptr;
  const auto ordinal_text = chunk_id.substr(hash + 1);
  std::size_t ordinal = 0;
  for (char c : ordinal_text) {
    if (c < '0' || c > '9') return nullptr;
    ordinal = ordinal * 10 + static_cast<std::size_t>(c - '0');
  }
  if (ordinal_text.empty() || ordinal >= it->second.size()) return nullptr;
  const Chunk& chunk = it->second[ordinal];
  return chunk.chunk_id == chunk_id ? &chunk : nullptr;
}

const std::vector<Chunk>& CorpusStore::chunks_of_document(std::string_view doc_id) const {
  auto it = chunks_.find(doc_id);
  return it == chunks_.end() ? empty_chunks() : it->second;
}

std::vector<const Chunk*> CorpusStore::chunks_of_analysis(std::string_view analysis_id) const {
  std::vector<const Chunk*> out;
  for (const auto& [doc_id, doc] : documents_) {
    if (doc.analysis_id != analysis_id) continue;
    for (const auto& chunk : chunks_of_document(doc_id)) out.push_back(&chunk);
  }
  return out;
}

std::vector<const Chunk*> CorpusStore::all_chunks() const {
  std::vector<const Chunk*> out;
  for (const auto& [doc_id, chunks] : chunks_) {
    for (const auto& chunk : chunks) out.push_back(&chunk);
  }
  return out;
}

std::size_t CorpusStore::chunk_count() const {
  std::size_t n = 0;
  for (const auto& [doc_id, chunks] : chunks_) n += chunks.size();
  return n;
}

void CorpusStore::check_integrity() const {
  for (const auto& [doc_id, doc] : documents_) {
    if (doc_id != doc.doc_id) throw Error(ErrorCode::FormatError, "document key mismatch " + doc_id);
    if (!analyses_.contains(doc.analysis_id)) {
      throw Error(ErrorCode::FormatError,
                  "document " + doc_id + " references missing analysis " + doc.analysis_id);
    }
  }
  for (const auto& [doc_id, chunks] : chunks_) {
    auto doc = documents_.find(doc_id);
    if (doc == documents_.end()) {
      throw Error(ErrorCode::FormatError, "chunks reference missing document " + doc_id);
    }
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const Chunk& c = chunks[i];
      if (c.ordinal != i || c.doc_id != doc_id || c.chunk_id != make_chunk_id(doc_id, i) ||
          c.analysis_id != doc->second.analysis_id || c.text.empty()) {
        throw Error(ErrorCode::FormatError, "inconsistent chunk " + c.chunk_id);
      }
    }
  }
}

void save_corpus(const CorpusStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());

  json header = {{"kind", "corpus_header"},
                 {"format", kCorpusFormat},
                 {"min_paragraph_chars", store.chunking().min_paragraph_chars},
                 {"analyses", store.analyses().size()},
                 {"documents", store.documents().size()},
                 {"chunks", store.chunk_count()}};
  out << header.dump() << '\n';
  for (const auto& [id, a] : store.analyses()) out << to_json(a).dump() << '\n';
  for (const auto& [id, d] : store.documents()) out << to_json(d).dump() << '\n';
  for (const auto* c : store.all_chunks()) out << to_json(*c).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

CorpusStore load_corpus(const std::filesystem::path& path) {
  auto in = open_for_read(path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, path.string() + ": empty file");

  CorpusStore store;
  std::size_t want_analyses = 0;
  std::size_t want_documents = 0;
  std::size_t want_chunks = 0;
  std::size_t line_no = 1;
  try {
    const json header = json::parse(line);
    if (header.at("kind") != "corpus_header" || header.at("format") != kCorpusFormat) {
      throw Error(ErrorCode::FormatError, path.string() + ": not a corpus file");
    }
    store.options_.min_paragraph_chars = header.value("min_paragraph_chars", std::size_t{20});
    want_analyses = header.at("analyses").get<std::size_t>();
    want_documents = header.at("documents").get<std::size_t>();
    want_chunks = header.at("chunks").get<std::size_t>();

    std::size_t chunks = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "analysis") {
        auto a = analysis_from_json(j);
        std::string key = a.analysis_id;
        store.analyses_.insert_or_assign(std::move(key), std::move(a));
      } else if (kind == "document") {
        auto d = document_from_json(j);
        std::string key = d.doc_id;
        store.documents_.insert_or_assign(std::move(key), std::move(d));
      } else if (kind == "chunk") {
        Chunk c{j.at("chunk_id").get<std::string>(), j.at("analysis_id").get<std::string>(),
                j.at("doc_id").get<std::string>(), j.at("ordinal").get<std::size_t>(),
                j.at("text").get<std::string>()};
        store.chunks_[c.doc_id].push_back(std::move(c));
        ++chunks;
      } else {
        throw Error(ErrorCode::FormatError, "unknown record kind '" + kind + "'");
      }
    }
    if (store.analyses_.size() != want_analyses || store.documents_.size() != want_documents ||
        chunks != want_chunks) {
      throw Error(ErrorCode::FormatError, "record counts do not match header (truncated file?)");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError,
                path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::FormatError) throw;
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  for (auto& [doc_id, chunks] : store.chunks_) {
    std::sort(chunks.begin(), chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.ordinal < b.ordinal; });
  }
  store.check_integrity();
  return store;
}

IngestSummary ingest_file(CorpusStore& store, const std::filesystem::path& path) {
  auto in = open_for_read(path);
  IngestSummary summary;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "analysis") {
        store.add_analysis(analysis_from_json(j));
        ++summary.analyses;
      } else if (kind == "document") {
        try {
          summary.chunks += store.ingest_document(document_from_json(j)).size();
          ++summary.documents;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::StaleVersion) throw;
          ++summary.stale;
        }
      } else {
        throw Error(ErrorCode::FormatError, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return summary;
}

}  // namespace mitra
