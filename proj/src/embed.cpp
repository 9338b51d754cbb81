#include "mitra/embed.hpp"

#include <cmath>

#include "json.hpp"
#include "mitra/error.hpp"
#include "mitra/lexical.hpp"
#include "mitra/transport.hpp"

namespace mitra {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Texts made only of separators still need a vector.
constexpr std::string_view kNoTokens = "\x01<no-tokens>";

void require_non_empty(std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed an empty text");
  }
}

}  // namespace

EmbeddingVector normalize(std::span<const double> raw) {
  double sq = 0.0;
  for (double x : raw) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite vector component");
    sq += x * x;
  }
  if (sq == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  const double norm = std::sqrt(sq);
  std::vector<double> out(raw.begin(), raw.end());
  for (double& x : out) x /= norm;
  return EmbeddingVector(std::move(out));
}

EmbeddingVector Embedder::embed(std::string_view text, EmbedRole role) const {
  const std::string owned(text);
  auto out = embed_texts(std::span<const std::string>(&owned, 1), role);
  return std::move(out.front());
}

StubEmbedder::StubEmbedder(std::size_t dimension, std::uint64_t seed, SynonymTable synonyms)
    : dimension_(dimension), seed_(seed), synonyms_(std::move(synonyms)) {
  if (dimension_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be > 0");
}

std::vector<double> StubEmbedder::token_vector(std::string_view canonical_token) const {
  std::uint64_t state = fnv1a(canonical_token) ^ (seed_ * 0xD6E8FEB86659FD93ULL);
  std::vector<double> v(dimension_);
  double sq = 0.0;
  for (double& x : v) {
    x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<EmbeddingVector> StubEmbedder::embed_texts(std::span<const std::string> texts,
                                                       EmbedRole) const {
  require_non_empty(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::vector<double> sum(dimension_);
  for (const auto& text : texts) {
    std::fill(sum.begin(), sum.end(), 0.0);
    auto tokens = canonical_tokens(text, synonyms_);
    if (tokens.empty()) tokens.emplace_back(kNoTokens);
    for (const auto& token : tokens) {
      const auto tv = token_vector(token);
      for (std::size_t i = 0; i < dimension_; ++i) sum[i] += tv[i];
    }
    out.push_back(normalize(sum));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.dimension == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be > 0");
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "remote embedder needs a transport");
  if (config_.max_batch == 0) config_.max_batch = 1;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_texts(std::span<const std::string> texts,
                                                         EmbedRole role) const {
  require_non_empty(texts);
  const Url url = parse_url(config_.endpoint_url);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += config_.max_batch) {
    const auto batch = texts.subspan(start, std::min(config_.max_batch, texts.size() - start));
    json request = {{"texts", batch}, {"role", role == EmbedRole::Query ? "query" : "passage"}};

    HttpReply reply;
    try {
      reply = transport_->post_json(url, request.dump(), config_.timeout);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ForbiddenEndpoint) throw;
      throw Error(ErrorCode::EmbedderUnavailable, std::string("embedding server: ") + e.what());
    }
    if (reply.status != 200) {
      throw Error(ErrorCode::EmbedderUnavailable,
                  "embedding server returned HTTP " + std::to_string(reply.status));
    }

    std::vector<std::vector<double>> vectors;
    try {
      vectors = json::parse(reply.body).at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::EmbedderUnavailable,
                  std::string("malformed embedding response: ") + e.what());
    }
    if (vectors.size() != batch.size()) {
      throw Error(ErrorCode::EmbedderUnavailable,
                  "embedding server returned " + std::to_string(vectors.size()) + " vectors for " +
                      std::to_string(batch.size()) + " texts");
    }
    for (const auto& v : vectors) {
      if (v.size() != config_.dimension) {
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding server returned dimension " + std::to_string(v.size()) +
                        ", expected " + std::to_string(config_.dimension));
      }
      out.push_back(normalize(v));
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<Transport> transport) {
  if (config.mode == ModelMode::Remote) {
    return std::make_unique<RemoteEmbedder>(config, std::move(transport));
  }
  SynonymTable synonyms;
  if (config.synonym_table_path) synonyms = SynonymTable::load(*config.synonym_table_path);
  return std::make_unique<StubEmbedder>(config.dimension, config.stub_seed, std::move(synonyms));
}

}  // namespace mitra
