#include <gtest/gtest.h>

#include <cmath>

#include "mitra/embed.hpp"
#include "mitra/error.hpp"

using namespace mitra;

namespace {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const EmbeddingVector& v) { return std::sqrt(dot(v, v)); }

}  // namespace

TEST(Normalize, UnitNorm) {
  const std::vector<double> raw{3, 4};
  const auto v = normalize(raw);
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(Normalize, RejectsZeroAndNonFinite) {
  const std::vector<double> zero{0, 0, 0};
  const std::vector<double> nan{1, std::nan("")};
  try {
    normalize(zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
  EXPECT_THROW(normalize(nan), Error);
}

TEST(StubEmbedder, DeterministicUnitVectors) {
  const StubEmbedder a(768, 9), b(768, 9), other_seed(768, 10);
  const auto va = a.embed("jet energy scale");
  EXPECT_EQ(va.size(), 768u);
  EXPECT_NEAR(norm(va), 1.0, 1e-12);
  EXPECT_EQ(va, b.embed("jet energy scale"));
  EXPECT_NE(va, other_seed.embed("jet energy scale"));
}

TEST(StubEmbedder, OrderAndCaseInsensitive) {
  const StubEmbedder e(128, 1);
  EXPECT_NEAR(dot(e.embed("Energy jet scale"), e.embed("scale JET energy")), 1.0, 1e-12);
}

TEST(StubEmbedder, OverlapRaisesSimilarity) {
  const StubEmbedder e(768, 1);
  const auto q = e.embed("muon trigger efficiency");
  EXPECT_GT(dot(q, e.embed("muon trigger efficiency measured in data")), dot(q, e.embed("photon isolation")));
}

TEST(StubEmbedder, SynonymsMapToSameVector) {
  SynonymTable syn;
  syn.add("transverse momentum", "pt");
  const StubEmbedder e(256, 4, syn);
  EXPECT_NEAR(dot(e.embed("transverse momentum"), e.embed("pt")), 1.0, 1e-12);
}

TEST(StubEmbedder, TokenlessTextStillEmbeds) {
  const StubEmbedder e(64, 1);
  const auto v = e.embed("?!");
  EXPECT_NEAR(norm(v), 1.0, 1e-12);
  EXPECT_EQ(v, e.embed("..."));
}

TEST(StubEmbedder, BatchMatchesSingle) {
  const StubEmbedder e(64, 2);
  const std::vector<std::string> texts{"one", "two words", "three more words"};
  const auto batch = e.embed_texts(texts, EmbedRole::Query);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(batch[i], e.embed(texts[i], EmbedRole::Query));
}

TEST(StubEmbedder, TokenVectorIsUnit) {
  const StubEmbedder e(32, 5);
  double s = 0;
  for (double x : e.token_vector("pt")) s += x * x;
  EXPECT_NEAR(s, 1.0, 1e-12);
}
