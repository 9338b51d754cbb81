#pragma once

// Embedding boundary: a remote on-premise server client and a deterministic
// bag-of-words stub, both producing unit-normalized vectors.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitra/synonyms.hpp"

namespace mitra {

class Transport;

inline constexpr std::size_t kDefaultDimension = 768;

/// Unit-norm vector. Construct through normalize().
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  friend EmbeddingVector normalize(std::span<const double> raw);
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}

  std::vector<double> values_;
};

/// raw / ||raw||_2. Throws ZeroVector when no component is nonzero, and
/// InvalidArgument on non-finite input.
EmbeddingVector normalize(std::span<const double> raw);

enum class EmbedRole { Passage, Query };

enum class ModelMode { Remote, Stub };

struct EmbedderConfig {
  ModelMode mode = ModelMode::Stub;
  std::string endpoint_url;
  std::size_t dimension = kDefaultDimension;
  std::uint64_t stub_seed = 0;
  std::optional<std::string> synonym_table_path;
  std::chrono::milliseconds timeout{30'000};
  std::size_t max_batch = 32;
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dimension() const = 0;

  /// One vector per input, same order. Every text must be non-empty.
  virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                                   EmbedRole role = EmbedRole::Passage) const = 0;

  EmbeddingVector embed(std::string_view text, EmbedRole role = EmbedRole::Passage) const;
};

/// Sum of per-token pseudo-random unit vectors, keyed by (canonical token,
/// seed), then normalized. Token order does not matter.
class StubEmbedder final : public Embedder {
 public:
  explicit StubEmbedder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = 0,
                        SynonymTable synonyms = {});

  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                           EmbedRole role = EmbedRole::Passage) const override;

  /// The unit vector a single canonical token contributes.
  std::vector<double> token_vector(std::string_view canonical_token) const;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
  SynonymTable synonyms_;
};

/// POST {"texts": [...], "role": "query"|"passage"} -> {"vectors": [[...]]}.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(EmbedderConfig config, std::shared_ptr<Transport> transport);

  std::size_t dimension() const override { return config_.dimension; }
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                           EmbedRole role = EmbedRole::Passage) const override;

 private:
  EmbedderConfig config_;
  std::shared_ptr<Transport> transport_;
};

/// Builds the embedder described by `config`. `transport` is only used in
/// remote mode.
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<Transport> transport);

}  // namespace mitra
