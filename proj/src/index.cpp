#include "mitra/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mitra/corpus.hpp"
#include "mitra/embed.hpp"
#include "mitra/error.hpp"
#include "mitra/simd/kernels.hpp"

namespace mitra {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'R', 'A', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kIndexVersion = 1;

bool hit_before(const RankedHit& a, const RankedHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

void put_f32(std::string& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }

void put_string(std::string& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

  std::string get_string() {
    const auto len = get_le<std::uint32_t>();
    need(len);
    std::string s(data_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::FormatError, "index file truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

void finalize_ranking(std::vector<RankedHit>& hits, std::size_t k) {
  const auto keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_before);
  hits.resize(keep);
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
}

std::vector<float> to_float32(const EmbeddingVector& vec) {
  std::vector<float> out(vec.size());
  for (std::size_t i = 0; i < vec.size(); ++i) out[i] = static_cast<float>(vec[i]);
  return out;
}

void VectorIndex::add(std::string chunk_id, std::string analysis_id, const EmbeddingVector& vec) {
  add(std::move(chunk_id), std::move(analysis_id), to_float32(vec));
}

void VectorIndex::add(std::string chunk_id, std::string analysis_id, std::span<const float> vec) {
  if (vec.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "vector of dimension " + std::to_string(vec.size()) +
                                                  " added to index of dimension " +
                                                  std::to_string(dimension_));
  }
  if (!id_set_.insert(chunk_id).second) {
    throw Error(ErrorCode::InvalidArgument, "duplicate index entry " + chunk_id);
  }
  ids_.push_back(std::move(chunk_id));
  analysis_ids_.push_back(std::move(analysis_id));
  matrix_.insert(matrix_.end(), vec.begin(), vec.end());
}

std::vector<RankedHit> VectorIndex::search_topk(const EmbeddingVector& query, std::size_t k) const {
  const auto q = to_float32(query);
  return search_topk(q, k);
}

std::vector<RankedHit> VectorIndex::search_topk(std::span<const float> query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "query of dimension " + std::to_string(query.size()) +
                                                  " against index of dimension " +
                                                  std::to_string(dimension_));
  }
  std::vector<double> scores(size());
  simd::dot_rows(matrix_, dimension_, query, scores);

  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids_[a] < ids_[b];
                    });

  std::vector<RankedHit> hits;
  hits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto row = order[i];
    hits.push_back({ids_[row], analysis_ids_[row], scores[row], i + 1});
  }
  return hits;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  std::string bytes(kMagic, sizeof(kMagic));
  put_le(bytes, kIndexVersion);
  put_le(bytes, static_cast<std::uint32_t>(index.dimension()));
  put_le(bytes, static_cast<std::uint64_t>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    put_string(bytes, index.chunk_id(i));
    put_string(bytes, index.analysis_id(i));
    for (float x : index.vector(i)) put_f32(bytes, x);
  }
  write_file(path, bytes);
}

VectorIndex load_index(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    Reader r(bytes);
    if (std::memcmp(r.get_bytes(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0) {
      throw Error(ErrorCode::FormatError, "bad magic");
    }
    if (const auto version = r.get_le<std::uint32_t>(); version != kIndexVersion) {
      throw Error(ErrorCode::FormatError, "unsupported index version " + std::to_string(version));
    }
    const auto dimension = r.get_le<std::uint32_t>();
    const auto count = r.get_le<std::uint64_t>();
    if (dimension == 0) throw Error(ErrorCode::FormatError, "zero dimension");
    VectorIndex index(dimension);
    std::vector<float> vec(dimension);
    for (std::uint64_t n = 0; n < count; ++n) {
      auto id = r.get_string();
      auto analysis = r.get_string();
      for (auto& x : vec) {
        x = r.get_f32();
        if (!std::isfinite(x)) throw Error(ErrorCode::FormatError, "non-finite vector component");
      }
      index.add(std::move(id), std::move(analysis), vec);
    }
    if (r.remaining() != 0) {
      throw Error(ErrorCode::FormatError, "payload does not match header (trailing bytes)");
    }
    return index;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

const VectorIndex& TieredIndexSet::fulltext_for(std::string_view analysis_id) const {
  auto it = fulltext.find(analysis_id);
  if (it == fulltext.end()) {
    throw Error(ErrorCode::MissingIndex,
                "no full-text index for analysis " + std::string(analysis_id));
  }
  return it->second;
}

void TieredIndexSet::check_consistency() const {
  if (abstracts.size() != fulltext.size()) {
    throw Error(ErrorCode::FormatError, "abstracts and full-text index sets differ in size");
  }
  for (std::size_t i = 0; i < abstracts.size(); ++i) {
    if (!fulltext.contains(abstracts.chunk_id(i))) {
      throw Error(ErrorCode::FormatError, "analysis " + abstracts.chunk_id(i) +
                                              " has no full-text index");
    }
  }
}

VectorIndex build_abstracts_index(const CorpusStore& store, const Embedder& embedder) {
  if (store.analyses().empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no analyses");
  std::vector<std::string> texts;
  for (const auto& [id, a] : store.analyses()) texts.push_back(a.abstract_text);
  const auto vectors = embedder.embed_texts(texts, EmbedRole::Passage);
  VectorIndex index(embedder.dimension());
  std::size_t i = 0;
  for (const auto& [id, a] : store.analyses()) index.add(id, id, vectors[i++]);
  return index;
}

VectorIndex build_fulltext_index(const CorpusStore& store, std::string_view analysis_id,
                                 const Embedder& embedder) {
  if (!store.find_analysis(analysis_id)) {
    throw Error(ErrorCode::UnknownAnalysis, "unknown analysis " + std::string(analysis_id));
  }
  VectorIndex index(embedder.dimension());
  const auto chunks = store.chunks_of_analysis(analysis_id);
  if (chunks.empty()) return index;
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto* c : chunks) texts.push_back(c->text);
  const auto vectors = embedder.embed_texts(texts, EmbedRole::Passage);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    index.add(chunks[i]->chunk_id, chunks[i]->analysis_id, vectors[i]);
  }
  return index;
}

TieredIndexSet build_tiered_indexes(const CorpusStore& store, const Embedder& embedder) {
  TieredIndexSet set;
  set.abstracts = build_abstracts_index(store, embedder);
  for (const auto& [id, a] : store.analyses()) {
    set.fulltext.emplace(id, build_fulltext_index(store, id, embedder));
  }
  return set;
}

void save_tiered_indexes(const TieredIndexSet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest = {{"format", 1},
                             {"dimension", set.abstracts.dimension()},
                             {"abstracts", "abstracts.idx"},
                             {"fulltext", nlohmann::json::array()}};
  save_index(set.abstracts, dir / "abstracts.idx");
  std::size_t n = 0;
  for (const auto& [analysis_id, index] : set.fulltext) {
    char name[32];
    std::snprintf(name, sizeof(name), "fulltext_%04zu.idx", n++);
    save_index(index, dir / name);
    manifest["fulltext"].push_back({{"analysis_id", analysis_id}, {"file", name}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

TieredIndexSet load_tiered_indexes(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw Error(ErrorCode::MissingIndex, "no index manifest in " + dir.string());
  }
  TieredIndexSet set;
  try {
    const auto manifest = nlohmann::json::parse(read_file(manifest_path));
    set.abstracts = load_index(dir / manifest.at("abstracts").get<std::string>());
    for (const auto& entry : manifest.at("fulltext")) {
      auto index = load_index(dir / entry.at("file").get<std::string>());
      if (index.dimension() != set.abstracts.dimension()) {
        throw Error(ErrorCode::FormatError, "full-text index dimension differs from abstracts");
      }
      set.fulltext.emplace(entry.at("analysis_id").get<std::string>(), std::move(index));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, manifest_path.string() + ": " + e.what());
  }
  set.check_consistency();
  return set;
}

}  // namespace mitra
