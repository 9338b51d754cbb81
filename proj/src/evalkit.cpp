#include "mitra/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mitra/error.hpp"

namespace mitra {

using nlohmann::json;

namespace {

std::size_t hits_in_top(std::span<const std::string> ranking, const RelevantSet& relevant,
                        std::size_t k) {
  const auto depth = std::min(k, ranking.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) hits += relevant.contains(ranking[i]) ? 1 : 0;
  return hits;
}

void require_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
}

void require_relevant(const RelevantSet& relevant) {
  if (relevant.empty()) throw Error(ErrorCode::EmptyRelevantSet, "relevant set is empty");
}

constexpr std::string_view display_name(std::string_view system) {
  return system == kBm25System ? "Keyword Search (BM25)" : "Dense + Rerank";
}

json metrics_to_json(const MetricValues& m) {
  return {{"P@1", m.p1}, {"R@1", m.r1}, {"P@3", m.p3},       {"R@3", m.r3},      {"P@5", m.p5},
          {"R@5", m.r5}, {"MRR", m.mrr}, {"NDCG@3", m.ndcg3}, {"NDCG@5", m.ndcg5}};
}

MetricValues metrics_from_json(const json& j) {
  return {j.at("P@1").get<double>(), j.at("R@1").get<double>(),    j.at("P@3").get<double>(),
          j.at("R@3").get<double>(), j.at("P@5").get<double>(),    j.at("R@5").get<double>(),
          j.at("MRR").get<double>(), j.at("NDCG@3").get<double>(), j.at("NDCG@5").get<double>()};
}

void accumulate(MetricValues& sum, const MetricValues& m) {
  sum.p1 += m.p1;
  sum.r1 += m.r1;
  sum.p3 += m.p3;
  sum.r3 += m.r3;
  sum.p5 += m.p5;
  sum.r5 += m.r5;
  sum.mrr += m.mrr;
  sum.ndcg3 += m.ndcg3;
  sum.ndcg5 += m.ndcg5;
}

MetricValues divided(MetricValues m, double n) {
  for (double* v : {&m.p1, &m.r1, &m.p3, &m.r3, &m.p5, &m.r5, &m.mrr, &m.ndcg3, &m.ndcg5}) *v /= n;
  return m;
}

std::string fixed2(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace

std::string_view query_set_name(QuerySet s) { return s == QuerySet::Set1 ? "Set1" : "Set2"; }

QuerySet parse_query_set(std::string_view name) {
  if (name == "Set1" || name == "set1" || name == "Set 1") return QuerySet::Set1;
  if (name == "Set2" || name == "set2" || name == "Set 2") return QuerySet::Set2;
  throw Error(ErrorCode::FormatError, "unknown query set label '" + std::string(name) + "'");
}

double precision_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  return static_cast<double>(hits_in_top(ranking, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  require_relevant(relevant);
  return static_cast<double>(hits_in_top(ranking, relevant, k)) /
         static_cast<double>(relevant.size());
}

double reciprocal_rank(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  const auto depth = std::min(k, ranking.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(ranking[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double mrr(std::span<const JudgedRanking> queries, std::size_t k) {
  if (queries.empty()) throw Error(ErrorCode::InvalidArgument, "MRR over zero queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += reciprocal_rank(q.ranking, q.relevant, k);
  return sum / static_cast<double>(queries.size());
}

double ndcg_at_k(std::span<const std::string> ranking, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  require_relevant(relevant);
  double dcg = 0.0;
  const auto depth = std::min(k, ranking.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  double idcg = 0.0;
  const auto ideal = std::min(k, relevant.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

MetricValues score_ranking(std::span<const std::string> ranking, const RelevantSet& relevant,
                           std::size_t cutoff) {
  MetricValues m;
  m.p1 = precision_at_k(ranking, relevant, 1);
  m.r1 = recall_at_k(ranking, relevant, 1);
  m.p3 = precision_at_k(ranking, relevant, 3);
  m.r3 = recall_at_k(ranking, relevant, 3);
  m.p5 = precision_at_k(ranking, relevant, 5);
  m.r5 = recall_at_k(ranking, relevant, 5);
  m.mrr = reciprocal_rank(ranking, relevant, cutoff);
  m.ndcg3 = ndcg_at_k(ranking, relevant, 3);
  m.ndcg5 = ndcg_at_k(ranking, relevant, 5);
  return m;
}

const SetAggregate& MetricsReport::at(std::string_view system, QuerySet set) const {
  auto sys = aggregates.find(std::string(system));
  if (sys == aggregates.end() || !sys->second.contains(set)) {
    throw Error(ErrorCode::InvalidArgument, "report has no " + std::string(system) + "/" +
                                                std::string(query_set_name(set)) + " aggregate");
  }
  return sys->second.at(set);
}

json MetricsReport::to_json() const {
  json systems = json::object();
  for (const auto& [system, sets] : aggregates) {
    json by_set = json::object();
    for (const auto& [set, agg] : sets) {
      json entry = metrics_to_json(agg.mean);
      entry["queries"] = agg.queries;
      by_set[std::string(query_set_name(set))] = std::move(entry);
    }
    systems[system] = std::move(by_set);
  }
  json rows = json::array();
  for (const auto& q : per_query) {
    rows.push_back({{"query_id", q.query_id},
                    {"set_label", query_set_name(q.set_label)},
                    {"system", q.system},
                    {"ranking", q.ranking},
                    {"metrics", metrics_to_json(q.metrics)}});
  }
  return {{"kind", "metrics_report"},
          {"k_retrieve", k_retrieve},
          {"k_final", k_final},
          {"bm25_depth", bm25_depth},
          {"systems", std::move(systems)},
          {"per_query", std::move(rows)}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  MetricsReport report;
  try {
    report.k_retrieve = j.at("k_retrieve").get<std::size_t>();
    report.k_final = j.at("k_final").get<std::size_t>();
    report.bm25_depth = j.at("bm25_depth").get<std::size_t>();
    for (const auto& [system, sets] : j.at("systems").items()) {
      for (const auto& [set, entry] : sets.items()) {
        report.aggregates[system][parse_query_set(set)] = {entry.at("queries").get<std::size_t>(),
                                                           metrics_from_json(entry)};
      }
    }
    for (const auto& row : j.at("per_query")) {
      report.per_query.push_back({row.at("query_id").get<std::string>(),
                                  parse_query_set(row.at("set_label").get<std::string>()),
                                  row.at("system").get<std::string>(),
                                  row.at("ranking").get<std::vector<std::string>>(),
                                  metrics_from_json(row.at("metrics"))});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed metrics report: ") + e.what());
  }
  return report;
}

std::string MetricsReport::format_tables() const {
  constexpr std::size_t kSetCol = 11;
  constexpr std::size_t kSysCol = 24;
  constexpr std::size_t kNumCol = 8;
  const std::string_view order[] = {kBm25System, kDenseSystem};

  auto header = [&](std::initializer_list<std::string_view> cols) {
    std::string line = pad("Query Set", kSetCol) + pad("System", kSysCol);
    for (auto c : cols) line += pad(c, kNumCol);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };
  auto rule = [&](std::size_t ncols) { return std::string(kSetCol + kSysCol + kNumCol * ncols - 2, '-') + "\n"; };

  auto body = [&](auto&& values) {
    std::string out;
    for (QuerySet set : {QuerySet::Set1, QuerySet::Set2}) {
      bool first = true;
      for (auto system : order) {
        auto sys = aggregates.find(std::string(system));
        if (sys == aggregates.end() || !sys->second.contains(set)) continue;
        std::string line = pad(first ? query_set_name(set) : "", kSetCol);
        line += pad(display_name(system), kSysCol);
        for (double v : values(sys->second.at(set).mean)) line += pad(fixed2(v), kNumCol);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        first = false;
      }
    }
    return out;
  };

  std::string out = "Retrieval completeness (P@k, R@k)\n";
  out += header({"P@1", "R@1", "P@3", "R@3", "P@5", "R@5"});
  out += rule(6);
  out += body([](const MetricValues& m) { return std::vector<double>{m.p1, m.r1, m.p3, m.r3, m.p5, m.r5}; });
  out += "\nRanking quality (MRR, NDCG@k)\n";
  out += header({"MRR", "NDCG@3", "NDCG@5"});
  out += rule(3);
  out += body([](const MetricValues& m) { return std::vector<double>{m.mrr, m.ndcg3, m.ndcg5}; });
  return out;
}

Bm25IndexSet build_bm25_indexes(const CorpusStore& corpus, Bm25Params params) {
  Bm25IndexSet out;
  for (const auto& [id, analysis] : corpus.analyses()) {
    std::vector<LexicalDocument> docs;
    for (const auto* c : corpus.chunks_of_analysis(id)) docs.push_back({c->chunk_id, c->analysis_id, c->text});
    out.emplace(id, Bm25Index(docs, params));
  }
  return out;
}

MetricsReport run_eval(const KnowledgeBase& kb, const Bm25IndexSet& bm25,
                       std::span<const GoldQuery> gold, const RagPipeline& pipeline,
                       const EvalOptions& options) {
  if (gold.empty()) throw Error(ErrorCode::InvalidArgument, "gold query set is empty");
  if (options.bm25_depth == 0) throw Error(ErrorCode::InvalidArgument, "bm25 depth must be >= 1");

  for (const auto& q : gold) {
    if (!kb.corpus.find_analysis(q.analysis_id)) {
      throw Error(ErrorCode::UnknownAnalysis,
                  "gold query " + q.query_id + " names unknown analysis " + q.analysis_id);
    }
    if (q.relevant_chunk_ids.empty()) {
      throw Error(ErrorCode::EmptyRelevantSet, "gold query " + q.query_id + " has no relevant chunks");
    }
    for (const auto& id : q.relevant_chunk_ids) {
      const Chunk* c = kb.corpus.find_chunk(id);
      if (!c || c->analysis_id != q.analysis_id) {
        throw Error(ErrorCode::UnknownChunk, "gold query " + q.query_id + ": chunk " + id +
                                                 " is not part of analysis " + q.analysis_id);
      }
    }
    kb.indexes.fulltext_for(q.analysis_id);
    if (!bm25.contains(q.analysis_id)) {
      throw Error(ErrorCode::MissingIndex, "no BM25 index for analysis " + q.analysis_id);
    }
  }

  MetricsReport report;
  report.k_retrieve = pipeline.config().k_retrieve;
  report.k_final = pipeline.config().k_final;
  report.bm25_depth = options.bm25_depth;

  // Fixed-position results, so aggregation does not depend on evaluation order.
  std::vector<QueryResult> dense(gold.size());
  std::vector<QueryResult> lexical(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& q = gold[i];

    auto& d = dense[i];
    d = {q.query_id, q.set_label, std::string(kDenseSystem), {}, {}};
    for (const auto& h : pipeline.ranked_context(kb, kb.indexes.fulltext_for(q.analysis_id), q.query_text)) {
      d.ranking.push_back(h.chunk_id);
    }
    d.metrics = score_ranking(d.ranking, q.relevant_chunk_ids, pipeline.config().k_final);

    auto& b = lexical[i];
    b = {q.query_id, q.set_label, std::string(kBm25System), {}, {}};
    for (const auto& h : bm25.find(q.analysis_id)->second.rank(q.query_text, options.bm25_depth)) {
      b.ranking.push_back(h.chunk_id);
    }
    b.metrics = score_ranking(b.ranking, q.relevant_chunk_ids, options.bm25_depth);
  }

  for (const auto* results : {&lexical, &dense}) {
    for (const auto& r : *results) {
      auto& agg = report.aggregates[r.system][r.set_label];
      ++agg.queries;
      accumulate(agg.mean, r.metrics);
    }
  }
  for (auto& [system, sets] : report.aggregates) {
    for (auto& [set, agg] : sets) agg.mean = divided(agg.mean, static_cast<double>(agg.queries));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    report.per_query.push_back(std::move(dense[i]));
    report.per_query.push_back(std::move(lexical[i]));
  }
  return report;
}

json gold_to_json(const GoldQuery& q) {
  return {{"query_id", q.query_id},
          {"analysis_id", q.analysis_id},
          {"query_text", q.query_text},
          {"relevant_chunk_ids", q.relevant_chunk_ids},
          {"set_label", query_set_name(q.set_label)}};
}

GoldQuery gold_from_json(const json& j) {
  GoldQuery q;
  q.query_id = j.at("query_id").get<std::string>();
  q.analysis_id = j.at("analysis_id").get<std::string>();
  q.query_text = j.at("query_text").get<std::string>();
  for (const auto& id : j.at("relevant_chunk_ids")) q.relevant_chunk_ids.insert(id.get<std::string>());
  q.set_label = parse_query_set(j.at("set_label").get<std::string>());
  return q;
}

std::vector<GoldQuery> load_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open gold file " + path.string());
  std::vector<GoldQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(gold_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_gold(const std::filesystem::path& path, std::span<const GoldQuery> gold) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& q : gold) out << gold_to_json(q).dump() << '\n';
}

}  // namespace mitra
