#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "../support/fake_servers.hpp"
#include "../support/oracle.hpp"
#include "../support/world.hpp"
#include "httplib.h"
#include "mitra/cli.hpp"
#include "mitra/config.hpp"
#include "mitra/embed.hpp"
#include "mitra/error.hpp"
#include "mitra/generate.hpp"
#include "mitra/lexical.hpp"
#include "mitra/service.hpp"
#include "mitra/session.hpp"

namespace acceptance {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Seconds = std::chrono::duration<double>;

constexpr double kMetricTolerance = 1e-9;
constexpr double kMetricBudgetSeconds = 5.0;
constexpr double kBm25Tolerance = 1e-6;
constexpr double kTopkTolerance = 1e-6;
constexpr double kDirectionalBudgetSeconds = 30.0;
constexpr double kSmokeBudgetSeconds = 10.0;
constexpr double kSet1MinP1 = 0.9;
constexpr double kSet2MinP1Gap = 0.3;
constexpr double kSet2MinMrrGap = 0.2;
constexpr std::size_t kMinAnalyses = 10;
constexpr std::size_t kMinChunksPerAnalysis = 20;
constexpr std::size_t kMinQueriesPerSet = 16;
constexpr std::size_t kStateMachineSteps = 10'000;

class Timer {
 public:
  double seconds() const { return Seconds(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("mitra-acceptance-" + tag + "-" + std::to_string(rd()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "mitra");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = mitra::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

Outcome metric_oracle() {
  std::mt19937_64 rng(2024);
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("c" + std::to_string(i));

  Timer timer;
  double worst = 0.0;
  std::vector<mitra::JudgedRanking> judged;
  std::vector<double> oracle_rr;
  const std::size_t mrr_k = 5;
  for (int n = 0; n < 1000; ++n) {
    auto shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::size_t n_rel = 1 + rng() % 8;
    const std::size_t n_rank = rng() % 16;
    std::vector<std::string> relevant(shuffled.begin(), shuffled.begin() + static_cast<long>(n_rel));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<std::string> ranking(shuffled.begin(), shuffled.begin() + static_cast<long>(n_rank));
    const std::size_t k = 1 + rng() % 10;
    const mitra::RelevantSet rel(relevant.begin(), relevant.end());

    worst = std::max(worst, std::abs(mitra::precision_at_k(ranking, rel, k) - oracle::precision(ranking, relevant, k)));
    worst = std::max(worst, std::abs(mitra::recall_at_k(ranking, rel, k) - oracle::recall(ranking, relevant, k)));
    worst = std::max(worst, std::abs(mitra::reciprocal_rank(ranking, rel, k) -
                                     oracle::reciprocal_rank(ranking, relevant, k)));
    worst = std::max(worst, std::abs(mitra::ndcg_at_k(ranking, rel, k) - oracle::ndcg(ranking, relevant, k)));
    judged.push_back({ranking, rel});
    oracle_rr.push_back(oracle::reciprocal_rank(ranking, relevant, mrr_k));
  }
  double mean_rr = 0.0;
  for (double v : oracle_rr) mean_rr += v;
  mean_rr /= static_cast<double>(oracle_rr.size());
  worst = std::max(worst, std::abs(mitra::mrr(judged, mrr_k) - mean_rr));
  const double elapsed = timer.seconds();
  return {worst < kMetricTolerance && elapsed < kMetricBudgetSeconds,
          "1000 instances, max |delta| " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

Outcome footnote() {
  std::size_t cases = 0;
  for (std::size_t pos = 0; pos < 5; ++pos) {
    for (std::size_t len = pos + 1; len <= 8; ++len) {
      for (std::size_t extra_relevant = 0; extra_relevant < 3; ++extra_relevant) {
        std::vector<std::string> ranking;
        for (std::size_t i = 0; i < len; ++i) ranking.push_back("n" + std::to_string(i));
        ranking[pos] = "hit";
        mitra::RelevantSet relevant{"hit"};
        for (std::size_t e = 0; e < extra_relevant; ++e) relevant.insert("missing" + std::to_string(e));
        // Relevant items ranked below 5 must not count.
        if (len > 5) relevant.insert(ranking[5]);
        ++cases;
        if (mitra::precision_at_k(ranking, relevant, 5) != 0.2) {
          return {false, "P@5 != 0.2 for relevant item at rank " + std::to_string(pos + 1)};
        }
      }
    }
  }
  return {true, std::to_string(cases) + " rankings, P@5 == 0.2 exactly"};
}

Outcome bm25_oracle() {
  const std::vector<mitra::LexicalDocument> docs{{"c1", "A", "a b"}, {"c2", "A", "a c"}, {"c3", "A", "d"}};
  const mitra::Bm25Index index(docs);
  const mitra::Bm25Index index_k3(docs, {3.0, 0.75});
  // Hand-evaluated: N=3, avgdl=5/3, idf = ln(1 + (N - n + 0.5) / (n + 0.5)).
  const std::vector<std::string> d{"d"}, a{"a"};
  const double errs[] = {std::abs(index.score(d, "c3") - 1.1961332353801541),
                         std::abs(index_k3.score(d, "c3") - 1.2655861329183566),
                         std::abs(index.score(a, "c1") - 0.43119599013370247),
                         std::abs(index.score(d, "c1") - 0.0)};
  const double hand_err = *std::max_element(std::begin(errs), std::end(errs));
  if (hand_err >= kBm25Tolerance) return {false, "hand oracle error " + fmt(hand_err)};

  std::mt19937_64 rng(99);
  std::vector<std::string> vocab;
  for (int i = 0; i < 60; ++i) vocab.push_back("w" + std::to_string(i));
  std::vector<mitra::LexicalDocument> chunks;
  std::vector<std::string> texts;
  for (int i = 0; i < 200; ++i) {
    std::string text;
    const std::size_t len = 3 + rng() % 28;
    for (std::size_t t = 0; t < len; ++t) text += vocab[std::min(rng() % 60, rng() % 60)] + " ";
    char id[16];
    std::snprintf(id, sizeof id, "x#%03d", i);
    chunks.push_back({id, "X", text});
    texts.push_back(text);
  }
  const mitra::Bm25Index big(chunks);
  std::size_t compared = 0;
  for (int q = 0; q < 40; ++q) {
    std::string query;
    for (std::size_t t = 0, n = 1 + rng() % 4; t < n; ++t) query += vocab[rng() % 60] + " ";
    const auto scores = oracle::bm25_scores(texts, query, 1.5, 0.75);
    std::vector<oracle::Scored> all;
    for (std::size_t i = 0; i < chunks.size(); ++i)
      if (scores[i] > 0) all.push_back({chunks[i].chunk_id, scores[i]});
    const auto expected = oracle::full_sort_topk(all, all.size());
    const auto got = big.rank(query, chunks.size());
    if (got.size() != expected.size()) return {false, "result count differs for query " + query};
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].chunk_id != expected[i].id || std::abs(got[i].score - expected[i].score) >= kBm25Tolerance) {
        return {false, "rank order differs at position " + std::to_string(i) + " for query " + query};
      }
    }
    compared += got.size();
  }
  return {true, "hand error " + fmt(hand_err) + "; 40 queries over 200 chunks, " + std::to_string(compared) +
                    " ranked entries match"};
}

Outcome topk_exactness() {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> gauss;
  constexpr std::size_t dim = 768;
  auto random_unit = [&] {
    std::vector<double> raw(dim);
    for (auto& x : raw) x = gauss(rng);
    return mitra::normalize(raw);
  };
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const std::size_t n = 1 + rng() % 400;
    mitra::VectorIndex index(dim);
    for (std::size_t i = 0; i < n; ++i) index.add("c" + std::to_string(rng() % 100000) + "_" + std::to_string(i), "A", random_unit());
    const auto query = mitra::to_float32(random_unit());
    std::vector<oracle::Scored> all;
    for (std::size_t i = 0; i < n; ++i) {
      all.push_back({index.chunk_id(i), oracle::dot(index.vector(i).data(), query.data(), dim)});
    }
    const std::size_t k = 1 + rng() % (n + 3);
    const auto expected = oracle::full_sort_topk(all, k);
    const auto got = index.search_topk(query, k);
    if (got.size() != expected.size()) return {false, "size mismatch on pair " + std::to_string(pair)};
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].chunk_id != expected[i].id) return {false, "id mismatch on pair " + std::to_string(pair)};
      worst = std::max(worst, std::abs(got[i].score - expected[i].score));
      if (got[i].rank != i + 1) return {false, "ranks not contiguous"};
    }
    const auto longer = index.search_topk(query, k + 1);
    if (!std::equal(got.begin(), got.end(), longer.begin())) {
      return {false, "prefix property broken on pair " + std::to_string(pair)};
    }
  }
  return {worst < kTopkTolerance, "100 pairs at dim 768, max score |delta| " + fmt(worst) + ", prefix holds"};
}

Outcome directional() {
  Timer timer;
  const auto dir = scratch_dir("directional");
  std::string log;
  if (cli({"gen-fixtures", "--out", dir.string()}, &log) != 0) return {false, "gen-fixtures failed: " + log};
  const auto config = (dir / "config.json").string();
  if (cli({"--config", config, "ingest", (dir / "ingest.jsonl").string()}, &log) != 0) return {false, log};
  if (cli({"--config", config, "build-index"}, &log) != 0) return {false, log};
  const auto report_path = dir / "report.json";
  if (cli({"--config", config, "--stub-models", "eval", (dir / "gold.jsonl").string(), "--report",
           report_path.string()},
          &log) != 0) {
    return {false, log};
  }

  const auto corpus = mitra::load_corpus(dir / "corpus.jsonl");
  std::size_t min_chunks = SIZE_MAX;
  for (const auto& [id, a] : corpus.analyses()) min_chunks = std::min(min_chunks, corpus.chunks_of_analysis(id).size());
  std::size_t set1 = 0, set2 = 0;
  for (const auto& q : mitra::load_gold(dir / "gold.jsonl")) (q.set_label == mitra::QuerySet::Set1 ? set1 : set2)++;
  if (corpus.analyses().size() < kMinAnalyses || min_chunks < kMinChunksPerAnalysis || set1 < kMinQueriesPerSet ||
      set2 < kMinQueriesPerSet) {
    return {false, "fixture too small: " + std::to_string(corpus.analyses().size()) + " analyses, min " +
                       std::to_string(min_chunks) + " chunks, " + std::to_string(set1) + "/" +
                       std::to_string(set2) + " queries"};
  }

  std::ifstream in(report_path);
  const auto report = mitra::MetricsReport::from_json(json::parse(in));
  const auto& d1 = report.at(mitra::kDenseSystem, mitra::QuerySet::Set1).mean;
  const auto& b1 = report.at(mitra::kBm25System, mitra::QuerySet::Set1).mean;
  const auto& d2 = report.at(mitra::kDenseSystem, mitra::QuerySet::Set2).mean;
  const auto& b2 = report.at(mitra::kBm25System, mitra::QuerySet::Set2).mean;
  const double elapsed = timer.seconds();
  fs::remove_all(dir);
  const bool ok = d1.p1 >= kSet1MinP1 && b1.p1 >= kSet1MinP1 && d2.p1 - b2.p1 >= kSet2MinP1Gap &&
                  d2.mrr - b2.mrr >= kSet2MinMrrGap && elapsed < kDirectionalBudgetSeconds;
  return {ok, "Set1 P@1 dense " + fmt(d1.p1) + " bm25 " + fmt(b1.p1) + "; Set2 P@1 dense " + fmt(d2.p1) +
                  " bm25 " + fmt(b2.p1) + ", MRR dense " + fmt(d2.mrr) + " bm25 " + fmt(b2.mrr) + "; " +
                  fmt(elapsed) + " s"};
}

Outcome state_machine() {
  const auto world = testsupport::make_world();
  const mitra::RagPipeline pipeline({20, 5, false, {}}, world.models);
  std::mt19937_64 rng(5150);

  enum class Phase { Fresh, Proposed, Locked };
  struct Tracked {
    mitra::Session session;
    Phase phase = Phase::Fresh;
    std::string analysis;
  };
  std::vector<Tracked> sessions(4);
  for (auto& t : sessions) t.session = mitra::create_session();

  std::vector<std::string> texts;
  for (const auto& q : world.fixtures.gold) texts.push_back(q.query_text);
  for (const auto& a : world.fixtures.analyses) texts.push_back(a.title);
  texts.push_back("completely unrelated words");

  auto phase_of = [](const mitra::SessionState& s) {
    if (std::holds_alternative<mitra::FreshState>(s)) return Phase::Fresh;
    if (std::holds_alternative<mitra::CandidateProposedState>(s)) return Phase::Proposed;
    return Phase::Locked;
  };

  std::size_t answers = 0, citations = 0, foreign = 0, qbc = 0, nac = 0;
  for (std::size_t step = 0; step < kStateMachineSteps; ++step) {
    auto& t = sessions[rng() % sessions.size()];
    const auto before = t.session.state;
    const int op = static_cast<int>(rng() % 10);
    std::optional<mitra::ErrorCode> raised;
    std::optional<mitra::QueryOutcome> outcome;
    try {
      if (op < 5) {
        const std::string text = rng() % 25 == 0 ? "   " : texts[rng() % texts.size()];
        outcome = mitra::handle_query(t.session, text, *world.kb, pipeline);
      } else if (op < 9) {
        mitra::confirm(t.session, rng() % 2 == 0);
      } else {
        mitra::reset(t.session);
      }
    } catch (const mitra::Error& e) {
      raised = e.code();
    }

    const Phase was = t.phase;
    const Phase now = phase_of(t.session.state);
    auto fail = [&](const std::string& why) {
      return Outcome{false, "step " + std::to_string(step) + ": " + why};
    };
    if (raised && !(t.session.state == before)) return fail("error changed session state");

    if (op < 5) {
      if (raised == mitra::ErrorCode::QueryBeforeConfirmation) {
        ++qbc;
        if (was != Phase::Proposed) return fail("QueryBeforeConfirmation outside CandidateProposed");
      } else if (raised == mitra::ErrorCode::EmptyQuery) {
        // Blank text is rejected in every state.
      } else if (raised) {
        return fail("unexpected error on query");
      } else if (was == Phase::Proposed) {
        return fail("query in CandidateProposed did not raise");
      } else if (was == Phase::Fresh) {
        if (now != Phase::Proposed || !std::holds_alternative<mitra::ConfirmationRequest>(*outcome)) {
          return fail("first query did not propose a candidate");
        }
        t.analysis = std::get<mitra::CandidateProposedState>(t.session.state).analysis_id;
        if (std::get<mitra::ConfirmationRequest>(*outcome).analysis_id != t.analysis) {
          return fail("confirmation names a different analysis");
        }
      } else {
        if (now != Phase::Locked || !std::holds_alternative<mitra::AnswerOutcome>(*outcome)) {
          return fail("locked query did not answer");
        }
        ++answers;
        for (const auto& c : std::get<mitra::AnswerOutcome>(*outcome).citations) {
          ++citations;
          if (c.hit.analysis_id != t.analysis) ++foreign;
        }
      }
    } else if (op < 9) {
      if (raised == mitra::ErrorCode::NotAwaitingConfirmation) {
        ++nac;
        if (was == Phase::Proposed) return fail("NotAwaitingConfirmation while CandidateProposed");
      } else if (raised) {
        return fail("unexpected error on confirm");
      } else if (was != Phase::Proposed) {
        return fail("confirm outside CandidateProposed did not raise");
      } else if (now == Phase::Locked) {
        if (std::get<mitra::LockedState>(t.session.state).analysis_id != t.analysis) {
          return fail("locked to a different analysis than proposed");
        }
      } else if (now != Phase::Fresh) {
        return fail("reject did not return to Fresh");
      }
    } else if (raised || now != Phase::Fresh) {
      return fail("reset did not return to Fresh");
    }
    if (!raised && op < 5 && was == Phase::Locked && now != Phase::Locked) return fail("left Locked on query");
    t.phase = now;
    if (now == Phase::Fresh) t.analysis.clear();
  }
  const bool ok = foreign == 0 && answers > 0 && qbc > 0 && nac > 0;
  return {ok, std::to_string(kStateMachineSteps) + " steps, " + std::to_string(answers) + " answers, " +
                  std::to_string(citations) + " citations, " + std::to_string(foreign) + " foreign, " +
                  std::to_string(qbc) + " QueryBeforeConfirmation, " + std::to_string(nac) +
                  " NotAwaitingConfirmation"};
}

Outcome privacy_boundary() {
  const auto fixtures = mitra::generate_fixtures({4, 2, 12, 2, 7});
  const auto synonyms = testsupport::synonyms_of(fixtures);
  testsupport::FakeModelServer models(synonyms);

  mitra::ServiceConfig config = mitra::config_from_json(json::object(), {});
  config.embedder.mode = mitra::ModelMode::Remote;
  config.embedder.endpoint_url = models.embed_url();
  config.reranker.mode = mitra::ModelMode::Remote;
  config.reranker.endpoint_url = models.rerank_url();
  config.generator.mode = mitra::ModelMode::Remote;
  config.generator.endpoint_url = models.generate_url();
  config.allowed_endpoints = {models.base_url()};
  config.validate();
  const std::set<std::string> allowed{mitra::parse_url(models.base_url()).origin()};

  auto recorder = std::make_shared<testsupport::RecordingTransport>(std::make_shared<mitra::HttpTransport>());
  const auto transport = mitra::make_transport(config, recorder);
  const auto model_set = mitra::make_models(config, transport);

  auto kb = std::make_shared<mitra::KnowledgeBase>();
  kb->corpus = testsupport::corpus_of(fixtures);
  kb->indexes = mitra::build_tiered_indexes(kb->corpus, *model_set.embedder);
  mitra::Service service(config, kb, model_set);

  const auto sid = service.dispatch("POST", "/v1/sessions", "{}").body.at("session_id").get<std::string>();
  const std::string base = "/v1/sessions/" + sid;
  const auto& q = fixtures.gold.front();
  service.dispatch("POST", base + "/query", json{{"text", q.query_text}}.dump());
  service.dispatch("POST", base + "/confirm", R"({"accept":true})");
  const auto answer = service.dispatch("POST", base + "/query", json{{"text", q.query_text}}.dump());
  json eval_body = {{"queries", json::array()}};
  for (const auto& g : fixtures.gold) eval_body["queries"].push_back(mitra::gold_to_json(g));
  const auto eval = service.dispatch("POST", "/v1/eval/run", eval_body.dump());
  if (answer.status != 200 || answer.body.value("kind", "") != "answer") return {false, "remote answer failed"};
  if (eval.status != 200) return {false, "remote eval failed: " + eval.body.dump()};

  // A destination outside the configured set must be refused before any I/O.
  const std::size_t before = recorder->origins().size();
  bool refused = false;
  try {
    transport->post_json(mitra::parse_url("http://192.0.2.1:9/embed"), "{}", std::chrono::milliseconds(100));
  } catch (const mitra::Error& e) {
    refused = e.code() == mitra::ErrorCode::ForbiddenEndpoint;
  }
  bool unlisted_rejected = false;
  auto bad = config;
  bad.generator.endpoint_url = "http://192.0.2.1:11434/api/generate";
  try {
    bad.validate();
  } catch (const mitra::Error&) {
    unlisted_rejected = true;
  }

  const auto origins = recorder->origins();
  std::size_t outside = 0;
  for (const auto& o : origins) outside += allowed.contains(o) ? 0 : 1;
  const bool ok = !origins.empty() && outside == 0 && refused && origins.size() == before && unlisted_rejected;
  return {ok, std::to_string(origins.size()) + " outbound calls, " + std::to_string(outside) +
                  " outside the configured endpoints; foreign destination refused: " + (refused ? "yes" : "no")};
}

Outcome grounding_contract() {
  const auto world = testsupport::make_world();
  const mitra::PipelineConfig pc{20, 5, false, {}};
  const mitra::RagPipeline pipeline(pc, world.models);
  std::size_t prompts = 0;
  for (const auto& q : world.fixtures.gold) {
    const auto& index = world.kb->indexes.fulltext_for(q.analysis_id);
    const auto ranked = pipeline.ranked_context(*world.kb, index, q.query_text);
    const auto answer = pipeline.answer(*world.kb, q.analysis_id, q.query_text);
    if (answer.prompt.find(mitra::kGroundingSentence) == std::string::npos) {
      return {false, "grounding sentence missing for " + q.query_id};
    }
    std::vector<std::string> expected;
    for (const auto& h : ranked) expected.push_back(h.chunk_id);
    if (expected.size() != pc.k_final) return {false, "fewer than k_final passages for " + q.query_id};
    if (mitra::cited_chunk_ids(answer.prompt) != expected) return {false, "prompt ids out of rank order"};
    std::size_t last = 0;
    for (const auto& id : expected) {
      const auto pos = answer.prompt.find("(" + id + ")");
      if (pos == std::string::npos || pos < last) return {false, "chunk id missing or out of order"};
      last = pos;
    }
    ++prompts;
  }

  // Budget: each passage is 100 chars; lowest ranks go first, rank 1 always stays.
  std::vector<mitra::ContextPassage> passages;
  for (std::size_t i = 1; i <= 5; ++i) {
    passages.push_back({{"doc#" + std::to_string(i), "A", 1.0 / static_cast<double>(i), i}, std::string(100, 'a' + static_cast<char>(i))});
  }
  for (std::size_t budget : {10'000u, 450u, 320u, 150u, 10u, 0u}) {
    mitra::GenerationConfig gc;
    gc.max_context_chars = budget;
    const auto ids = mitra::cited_chunk_ids(mitra::assemble_prompt("q", passages, gc));
    const std::size_t kept = mitra::passages_within_budget(passages, gc);
    if (ids.empty() || ids.front() != "doc#1") return {false, "rank 1 dropped at budget " + std::to_string(budget)};
    if (ids.size() != kept) return {false, "prompt and budget disagree"};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != "doc#" + std::to_string(i + 1)) return {false, "non-prefix retention"};
    }
    if (budget == 10'000u && kept != 5) return {false, "dropped passages under a large budget"};
    if (budget <= 150u && kept != 1) return {false, "kept too much under a small budget"};
  }
  return {true, std::to_string(prompts) + " prompts carry the sentence and k_final ids in rank order; budget drops from the tail"};
}

Outcome smoke() {
  Timer timer;
  const auto dir = scratch_dir("smoke");
  std::string log;
  if (cli({"gen-fixtures", "--out", dir.string()}, &log) != 0) return {false, log};
  const auto config = (dir / "config.json").string();
  const auto loaded = mitra::load_config(config);
  if (!loaded.remote_endpoints().empty()) return {false, "fixture config names remote endpoints"};
  if (cli({"--config", config, "ingest", (dir / "ingest.jsonl").string()}, &log) != 0) return {false, log};
  if (cli({"--config", config, "build-index"}, &log) != 0) return {false, log};

  const auto port_file = dir / "port";
  int serve_rc = -1;
  std::thread server([&] {
    serve_rc = cli({"--config", config, "serve", "--listen", "127.0.0.1:0", "--port-file", port_file.string()});
  });
  int port = 0;
  for (int i = 0; i < 500 && port == 0; ++i) {
    std::ifstream in(port_file);
    if (!(in >> port)) {
      port = 0;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  Outcome result{false, "server never reported a port"};
  if (port != 0) {
    httplib::Client client("127.0.0.1", port);
    auto post = [&](const std::string& path, const json& body) {
      auto res = client.Post(path, body.dump(), "application/json");
      return res ? json::parse(res->body) : json{{"kind", "no_response"}};
    };
    const auto gold = mitra::load_gold(dir / "gold.jsonl");
    const auto& q = gold.front();
    std::string topic;
    if (auto res = client.Get("/v1/analyses")) {
      const auto listing = json::parse(res->body);
      for (const auto& a : listing.at("analyses"))
        if (a.value("analysis_id", "") == q.analysis_id) topic = a.value("abstract_excerpt", "");
    }
    const auto session = post("/v1/sessions", json::object());
    const std::string base = "/v1/sessions/" + session.value("session_id", "");
    // The first question describes the topic (abstracts are what the first tier
    // searches); the gold question is asked once locked.
    const auto proposal = post(base + "/query", {{"text", "Question about the study where " + topic}});
    const auto locked = post(base + "/confirm", {{"accept", true}});
    const auto answer = post(base + "/query", {{"text", q.query_text}});
    const bool proposed_right = proposal.value("kind", "") == "confirmation_request" &&
                                proposal.value("analysis_id", "") == q.analysis_id;
    const bool is_locked = locked.value("state", "") == "locked";
    bool cited = answer.value("kind", "") == "answer" && !answer["citations"].empty();
    bool gold_cited = false;
    if (cited) {
      for (const auto& c : answer["citations"]) {
        cited = cited && c.value("analysis_id", "") == q.analysis_id &&
                answer.value("text", "").find(c.value("chunk_id", "")) != std::string::npos;
        gold_cited = gold_cited || q.relevant_chunk_ids.contains(c.value("chunk_id", ""));
      }
    }
    cited = cited && gold_cited;
    result = {proposed_right && is_locked && cited,
              "proposal " + std::string(proposed_right ? "ok" : "wrong") + ", lock " + (is_locked ? "ok" : "failed") +
                  ", " + std::to_string(answer.value("citations", json::array()).size()) + " citations"};
  }
  mitra::request_cli_shutdown();
  server.join();
  const double elapsed = timer.seconds();
  fs::remove_all(dir);
  result.pass = result.pass && serve_rc == 0 && elapsed < kSmokeBudgetSeconds;
  result.detail += ", " + fmt(elapsed) + " s";
  return result;
}

}  // namespace

std::vector<Criterion> all_criteria() {
  return {{"metric-oracle-equivalence", metric_oracle},
          {"footnote-p5", footnote},
          {"bm25-hand-oracle", bm25_oracle},
          {"topk-exactness", topk_exactness},
          {"directional-set1-set2", directional},
          {"state-machine-soundness", state_machine},
          {"privacy-boundary", privacy_boundary},
          {"grounding-prompt-contract", grounding_contract},
          {"end-to-end-smoke", smoke}};
}

}  // namespace acceptance
