#pragma once

// Grounded answer generation against a local model server.

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitra/embed.hpp"
#include "mitra/index.hpp"

namespace mitra {

class Transport;

inline constexpr std::string_view kGroundingSentence =
    "Answer strictly and only from the numbered context passages above; if the context does "
    "not contain the answer, say so.";

inline constexpr std::string_view kNoContextMarker = "NO CONTEXT AVAILABLE";

std::string default_grounding_preamble();

struct GenerationConfig {
  ModelMode mode = ModelMode::Stub;
  std::string endpoint_url;
  std::string model_name = "mistral:7b-instruct-q4_0";
  std::size_t max_context_chars = 12'000;
  std::string grounding_preamble = default_grounding_preamble();
  std::chrono::milliseconds timeout{120'000};
};

struct ContextPassage {
  RankedHit hit;
  std::string text;
};

/// Preamble (with kGroundingSentence appended if a custom preamble lacks it), then passages in the given (rank) order as "[i] (chunk_id)"
/// blocks, then the question. Lowest-ranked passages are dropped until the
/// passage section fits max_context_chars; the first passage is always kept.
std::string assemble_prompt(std::string_view query, std::span<const ContextPassage> passages,
                            const GenerationConfig& config);

/// How many leading passages assemble_prompt() keeps (>= 1 when any exist).
std::size_t passages_within_budget(std::span<const ContextPassage> passages,
                                   const GenerationConfig& config);

/// Chunk ids of the "[i] (chunk_id)" passage headers in a prompt, in order.
std::vector<std::string> cited_chunk_ids(std::string_view prompt);

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(std::string_view prompt) const = 0;
};

/// Deterministic echo of the passage ids found in the prompt.
class StubGenerator final : public Generator {
 public:
  std::string generate(std::string_view prompt) const override;
};

/// POST {"model", "prompt", "stream": false} -> {"response"}.
class RemoteGenerator final : public Generator {
 public:
  RemoteGenerator(GenerationConfig config, std::shared_ptr<Transport> transport);
  std::string generate(std::string_view prompt) const override;

 private:
  GenerationConfig config_;
  std::shared_ptr<Transport> transport_;
};

std::unique_ptr<Generator> make_generator(const GenerationConfig& config,
                                          std::shared_ptr<Transport> transport);

}  // namespace mitra
