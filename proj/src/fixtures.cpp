#include "mitra/fixtures.hpp"

#include <array>
#include <cctype>
#include <map>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mitra/error.hpp"

namespace mitra {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::uint64_t state_;
};

struct Topic {
  const char* title;
  const char* abstract;
};

// Abstract vocabularies are kept disjoint enough that a topical first query
// selects one analysis.
constexpr std::array<Topic, 12> kTopics{{
    {"Search for dark matter in monojet final states",
     "We search for dark matter particles produced in association with an energetic jet, "
     "recoiling against missing transverse momentum, using proton collision data."},
    {"Measurement of Higgs boson decays to muon pairs",
     "The Higgs boson decay to a pair of opposite sign muons is measured with a categorized "
     "dimuon invariant mass fit across gluon fusion and vector boson fusion categories."},
    {"Top quark pair production cross section",
     "We measure the inclusive top quark pair cross section in the electron muon channel "
     "with b tagged jets and compare against next to next to leading order predictions."},
    {"Search for heavy neutral leptons",
     "A search for heavy neutral leptons in displaced vertex topologies with a prompt lepton "
     "and a long lived decay inside the tracker volume."},
    {"W boson mass measurement",
     "The W boson mass is extracted from the lepton transverse momentum spectrum using "
     "calibrated templates and a profile likelihood fit."},
    {"Search for supersymmetric stop quarks",
     "Pair produced stop squarks decaying to top quarks and neutralinos are searched for in "
     "all hadronic final states with large scalar sum of jet momenta."},
    {"Jet energy scale calibration",
     "The jet energy scale and resolution are calibrated with dijet balance, photon plus jet "
     "and Z plus jet events in the calorimeter."},
    {"Observation of rare B meson decays",
     "Rare decays of B mesons to dimuon final states are observed using a dedicated low mass "
     "trigger and a boosted decision tree classifier."},
    {"Search for resonances in diphoton spectrum",
     "A search for new scalar resonances decaying to photon pairs is performed in the "
     "diphoton invariant mass spectrum with an analytic background model."},
    {"Measurement of the tau lepton polarization",
     "Tau lepton polarization in Z boson decays is measured using hadronic tau decay modes "
     "reconstructed with the particle flow algorithm."},
    {"Search for long lived particles in the muon system",
     "Long lived neutral particles decaying inside the muon endcap detectors are searched "
     "for using clusters of cathode strip chamber hits."},
    {"Vector boson scattering in same sign WW events",
     "Electroweak production of same sign W boson pairs with two forward jets probes vector "
     "boson scattering and the unitarization of the scattering amplitude."},
}};

constexpr std::array<const char*, 40> kFiller{
    "events", "selection", "sample",  "signal",      "background", "region",     "detector",
    "trigger", "efficiency", "uncertainty", "measured", "using",    "with",       "from",
    "data",   "simulation", "the",    "is",          "of",         "and",        "in",
    "for",    "by",         "was",    "are",         "after",      "within",     "between",
    "shown",  "table",      "figure", "estimate",    "control",    "systematic", "statistical",
    "fit",    "yield",      "nominal", "corrected",  "applied"};

constexpr std::array<const char*, 6> kQuestionLeads{"what is the", "how is the", "describe the",
                                                    "which", "explain the", "where is the"};

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}

  std::string make(std::size_t syllables) {
    static constexpr std::string_view kOnset = "bdfgklmnprstvz";
    static constexpr std::string_view kVowel = "aeiou";
    for (;;) {
      std::string w;
      for (std::size_t i = 0; i < syllables; ++i) {
        w += kOnset[rng_.below(kOnset.size())];
        w += kVowel[rng_.below(kVowel.size())];
      }
      w += kOnset[rng_.below(kOnset.size())];
      if (used_.insert(w).second) return w;
    }
  }

  void reserve(std::string_view w) { used_.insert(std::string(w)); }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

struct ChunkPlan {
  std::array<std::string, 3> concepts;
  std::vector<std::string> tokens;
};

std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string analysis_id_for(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ANA-%02zu", i + 1);
  return buf;
}

}  // namespace

FixtureSet generate_fixtures(const FixtureOptions& options) {
  if (options.analyses == 0 || options.analyses > kTopics.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "fixture analyses must be in [1, " + std::to_string(kTopics.size()) + "]");
  }
  if (options.docs_per_analysis == 0 || options.chunks_per_doc == 0) {
    throw Error(ErrorCode::InvalidArgument, "fixture needs at least one document and chunk");
  }

  Rng rng(options.seed);
  WordMaker words(rng);
  for (const char* f : kFiller) words.reserve(f);

  FixtureSet out;
  std::map<std::string, std::string> paraphrase_of;  // canonical -> surface

  for (std::size_t a = 0; a < options.analyses; ++a) {
    const auto analysis_id = analysis_id_for(a);
    out.analyses.push_back({analysis_id, kTopics[a].title, kTopics[a].abstract});

    std::vector<std::pair<std::string, ChunkPlan>> plans;  // chunk_id, plan
    for (std::size_t d = 0; d < options.docs_per_analysis; ++d) {
      char doc_id[48];
      std::snprintf(doc_id, sizeof(doc_id), "%s-note%zu", analysis_id.c_str(), d + 1);

      // A short heading paragraph; the chunker merges it into chunk 0.
      std::string body = "Section " + std::to_string(d + 1) + "\n\n";
      for (std::size_t c = 0; c < options.chunks_per_doc; ++c) {
        ChunkPlan plan;
        for (auto& concept_word : plan.concepts) {
          concept_word = words.make(3);
          paraphrase_of[concept_word] = words.make(2) + " " + words.make(2);
        }
        // Nine filler words, concepts at positions 2, 6 and 10.
        for (std::size_t i = 0; i < 9; ++i) plan.tokens.emplace_back(kFiller[rng.below(kFiller.size())]);
        plan.tokens.insert(plan.tokens.begin() + 2, plan.concepts[0]);
        plan.tokens.insert(plan.tokens.begin() + 6, plan.concepts[1]);
        plan.tokens.insert(plan.tokens.begin() + 10, plan.concepts[2]);
        std::string sentence = join(plan.tokens, 0, plan.tokens.size());
        sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
        body += sentence + ".";
        body += c + 1 < options.chunks_per_doc ? "\n\n" : "\n";
        plans.emplace_back(make_chunk_id(doc_id, c), std::move(plan));
      }
      if (split_paragraphs(body).size() != options.chunks_per_doc) {
        throw Error(ErrorCode::InvalidArgument, "fixture paragraphs did not chunk one-to-one");
      }
      out.documents.push_back({doc_id, analysis_id, std::move(body), 1});
    }

    // Pick distinct target chunks for each set.
    std::vector<std::size_t> order(plans.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t per_set = std::min(options.queries_per_set_per_analysis, plans.size());
    for (std::size_t q = 0; q < per_set; ++q) {
      const auto& [chunk_id, plan] = plans[order[q]];
      // Set1: exact phrase spanning two concepts, copied from the chunk.
      const std::string phrase = join(plan.tokens, 2, 7);
      out.gold.push_back({analysis_id + "-s1-" + std::to_string(q + 1), analysis_id, phrase,
                          {chunk_id}, QuerySet::Set1});
    }
    for (std::size_t q = 0; q < per_set; ++q) {
      const auto& [chunk_id, plan] = plans[order[order.size() - 1 - q]];
      // Set2: the same kind of information need, phrased with paraphrases.
      std::string text = kQuestionLeads[rng.below(kQuestionLeads.size())];
      text += " " + paraphrase_of.at(plan.concepts[0]);
      text += " " + std::string(kFiller[rng.below(kFiller.size())]);
      text += " " + paraphrase_of.at(plan.concepts[1]);
      text += " " + paraphrase_of.at(plan.concepts[2]);
      out.gold.push_back({analysis_id + "-s2-" + std::to_string(q + 1), analysis_id, text,
                          {chunk_id}, QuerySet::Set2});
    }
  }

  out.synonyms = {{"transverse momentum", "pt"}, {"requirement", "cut"}};
  for (const auto& [canonical, surface] : paraphrase_of) out.synonyms.emplace_back(surface, canonical);
  return out;
}

FixturePaths write_fixtures(const FixtureSet& fixtures, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  FixturePaths paths{dir / "ingest.jsonl", dir / "synonyms.tsv", dir / "gold.jsonl", dir / "config.json"};

  {
    std::ofstream out(paths.ingest, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + paths.ingest.string());
    for (const auto& a : fixtures.analyses) {
      out << nlohmann::json{{"kind", "analysis"},
                            {"analysis_id", a.analysis_id},
                            {"title", a.title},
                            {"abstract_text", a.abstract_text}}
                 .dump()
          << '\n';
    }
    for (const auto& d : fixtures.documents) {
      out << nlohmann::json{{"kind", "document"},
                            {"doc_id", d.doc_id},
                            {"analysis_id", d.analysis_id},
                            {"version", d.version},
                            {"body_text", d.body_text}}
                 .dump()
          << '\n';
    }
  }
  {
    std::ofstream out(paths.synonyms, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + paths.synonyms.string());
    out << "# surface form\tcanonical form\n";
    for (const auto& [surface, canonical] : fixtures.synonyms) out << surface << '\t' << canonical << '\n';
  }
  save_gold(paths.gold, fixtures.gold);
  {
    const nlohmann::json config = {
        {"listen", "127.0.0.1:8080"},
        {"corpus_path", "corpus.jsonl"},
        {"index_dir", "index"},
        {"k_retrieve", 20},
        {"k_final", 5},
        {"embedder", {{"mode", "stub"}, {"dimension", 768}, {"stub_seed", 42},
                      {"synonym_table_path", "synonyms.tsv"}}},
        {"reranker", {{"mode", "stub"}, {"synonym_table_path", "synonyms.tsv"}}},
        {"generator", {{"mode", "stub"}}},
    };
    std::ofstream out(paths.config, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + paths.config.string());
    out << config.dump(2) << '\n';
  }
  return paths;
}

}  // namespace mitra
