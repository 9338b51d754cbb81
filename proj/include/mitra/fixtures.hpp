#pragma once

// Synthetic corpus + gold query generator. Every analysis gets chunks with
// distinctive "concept" terms; Set1 queries quote chunk text verbatim, Set2
// queries name the same concepts through paraphrases that only the synonym
// table connects back to the corpus vocabulary.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mitra/corpus.hpp"
#include "mitra/evalkit.hpp"

namespace mitra {

struct FixtureOptions {
  std::size_t analyses = 12;
  std::size_t docs_per_analysis = 2;
  std::size_t chunks_per_doc = 12;
  std::size_t queries_per_set_per_analysis = 2;
  std::uint64_t seed = 7;
};

struct FixtureSet {
  std::vector<AnalysisRecord> analyses;
  std::vector<Document> documents;
  std::vector<std::pair<std::string, std::string>> synonyms;  // surface -> canonical
  std::vector<GoldQuery> gold;
};

FixtureSet generate_fixtures(const FixtureOptions& options = {});

struct FixturePaths {
  std::filesystem::path ingest;    // ingest.jsonl
  std::filesystem::path synonyms;  // synonyms.tsv
  std::filesystem::path gold;      // gold.jsonl
  std::filesystem::path config;    // config.json, stub models, paths relative to dir
};

/// Writes the fixture files into `dir` (created if needed).
FixturePaths write_fixtures(const FixtureSet& fixtures, const std::filesystem::path& dir);

}  // namespace mitra
