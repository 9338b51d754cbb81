#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mitra/error.hpp"
#include "mitra/evalkit.hpp"
#include "oracle.hpp"
#include "world.hpp"

using namespace mitra;

namespace {

std::vector<std::string> v(std::initializer_list<const char*> ids) { return {ids.begin(), ids.end()}; }

}  // namespace

TEST(Metrics, FrozenValues) {
  const RelevantSet rel{"a", "b"};
  const auto ranking = v({"a", "x", "b"});
  EXPECT_NEAR(ndcg_at_k(ranking, rel, 3), 0.9197207891481876, 1e-12);
  EXPECT_DOUBLE_EQ(precision_at_k(ranking, rel, 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recall_at_k(ranking, rel, 1), 0.5);
  EXPECT_DOUBLE_EQ(reciprocal_rank(v({"x", "a"}), rel, 5), 0.5);
  EXPECT_DOUBLE_EQ(reciprocal_rank(v({"x", "a"}), rel, 1), 0.0);

  const std::vector<JudgedRanking> queries{
      {v({"r"}), {"r"}}, {v({"x", "r"}), {"r"}}, {v({"x", "y", "z", "r"}), {"r"}}};
  EXPECT_NEAR(mrr(queries, 5), 0.5833333333333334, 1e-12);
}

TEST(Metrics, FootnoteSingleRelevantGivesPointTwo) {
  for (std::size_t pos = 0; pos < 5; ++pos) {
    auto ranking = v({"a", "b", "c", "d", "e"});
    ranking[pos] = "hit";
    EXPECT_EQ(precision_at_k(ranking, {"hit"}, 5), 0.2);
  }
  EXPECT_EQ(precision_at_k(v({"hit"}), {"hit"}, 5), 0.2);
}

TEST(Metrics, EmptyInputs) {
  EXPECT_THROW(recall_at_k(v({"a"}), {}, 1), Error);
  EXPECT_THROW(ndcg_at_k(v({"a"}), {}, 1), Error);
  EXPECT_THROW(mrr({}, 5), Error);
  EXPECT_DOUBLE_EQ(precision_at_k({}, {"a"}, 3), 0.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k({}, {"a"}, 3), 0.0);
}

TEST(Metrics, RandomizedAgainstOracle) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 1000; ++n) {
    std::vector<std::string> pool;
    for (int i = 0; i < 20; ++i) pool.push_back("p" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<std::string> relevant(pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 6));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<std::string> ranking(pool.begin(), pool.begin() + static_cast<long>(rng() % 12));
    const RelevantSet rel(relevant.begin(), relevant.end());
    for (std::size_t k : {1u, 3u, 5u, 10u}) {
      EXPECT_NEAR(precision_at_k(ranking, rel, k), oracle::precision(ranking, relevant, k), 1e-12);
      EXPECT_NEAR(recall_at_k(ranking, rel, k), oracle::recall(ranking, relevant, k), 1e-12);
      EXPECT_NEAR(reciprocal_rank(ranking, rel, k), oracle::reciprocal_rank(ranking, relevant, k), 1e-12);
      EXPECT_NEAR(ndcg_at_k(ranking, rel, k), oracle::ndcg(ranking, relevant, k), 1e-12);
    }
  }
}

TEST(Metrics, ScoreRankingBundlesTableMetrics) {
  const RelevantSet rel{"b"};
  const auto m = score_ranking(v({"a", "b", "c"}), rel, 5);
  EXPECT_DOUBLE_EQ(m.p1, 0.0);
  EXPECT_DOUBLE_EQ(m.p3, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.p5, 0.2);
  EXPECT_DOUBLE_EQ(m.r3, 1.0);
  EXPECT_DOUBLE_EQ(m.mrr, 0.5);
  EXPECT_NEAR(m.ndcg3, 1.0 / std::log2(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(score_ranking(v({"a", "b"}), rel, 1).mrr, 0.0);
}

TEST(QuerySetNames, RoundTrip) {
  EXPECT_EQ(parse_query_set(query_set_name(QuerySet::Set1)), QuerySet::Set1);
  EXPECT_EQ(parse_query_set(query_set_name(QuerySet::Set2)), QuerySet::Set2);
  EXPECT_THROW(parse_query_set("Set3"), Error);
}

TEST(Gold, FileRoundTrip) {
  const std::vector<GoldQuery> gold{{"q1", "A", "text one", {"d#0", "d#1"}, QuerySet::Set1},
                                    {"q2", "B", "text \"two\"", {"e#3"}, QuerySet::Set2}};
  const auto path = std::filesystem::temp_directory_path() / "mitra-unit-gold.jsonl";
  save_gold(path, gold);
  EXPECT_EQ(load_gold(path), gold);
  EXPECT_EQ(gold_from_json(gold_to_json(gold[1])), gold[1]);
}

class EvalFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { world_ = new testsupport::World(testsupport::make_world({4, 2, 12, 2, 7})); }
  static void TearDownTestSuite() { delete world_; }
  static testsupport::World* world_;
};

testsupport::World* EvalFixture::world_ = nullptr;

TEST_F(EvalFixture, ReportShapeAndAggregates) {
  const RagPipeline pipeline({20, 5, false, {}}, world_->models);
  const auto bm25 = build_bm25_indexes(world_->kb->corpus);
  EXPECT_EQ(bm25.size(), 4u);
  const auto report = run_eval(*world_->kb, bm25, world_->fixtures.gold, pipeline);
  EXPECT_EQ(report.per_query.size(), 2 * world_->fixtures.gold.size());
  EXPECT_EQ(report.at(kDenseSystem, QuerySet::Set1).queries, 8u);
  EXPECT_EQ(report.k_final, 5u);

  // Aggregates are plain means of the per-query metrics.
  double sum = 0;
  std::size_t n = 0;
  for (const auto& q : report.per_query) {
    if (q.system == kBm25System && q.set_label == QuerySet::Set2) {
      sum += q.metrics.mrr;
      ++n;
      EXPECT_LE(q.ranking.size(), 5u);
    }
  }
  EXPECT_NEAR(report.at(kBm25System, QuerySet::Set2).mean.mrr, sum / static_cast<double>(n), 1e-12);

  EXPECT_EQ(MetricsReport::from_json(report.to_json()), report);
  const auto tables = report.format_tables();
  EXPECT_NE(tables.find("Keyword Search (BM25)"), std::string::npos);
  EXPECT_NE(tables.find("Dense + Rerank"), std::string::npos);
  EXPECT_NE(tables.find("NDCG@5"), std::string::npos);
}

TEST_F(EvalFixture, ValidationErrors) {
  const RagPipeline pipeline({20, 5, false, {}}, world_->models);
  const auto bm25 = build_bm25_indexes(world_->kb->corpus);
  auto code = [&](std::vector<GoldQuery> gold) {
    try {
      run_eval(*world_->kb, bm25, gold, pipeline);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::FormatError;
  };
  EXPECT_EQ(code({}), ErrorCode::InvalidArgument);
  auto q = world_->fixtures.gold.front();
  q.analysis_id = "nope";
  EXPECT_EQ(code({q}), ErrorCode::UnknownAnalysis);
  q = world_->fixtures.gold.front();
  q.relevant_chunk_ids = {"ghost#0"};
  EXPECT_EQ(code({q}), ErrorCode::UnknownChunk);
  q = world_->fixtures.gold.front();
  q.analysis_id = world_->fixtures.analyses[1].analysis_id;
  EXPECT_EQ(code({q}), ErrorCode::UnknownChunk);
}
