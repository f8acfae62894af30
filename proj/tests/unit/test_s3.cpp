#include <gtest/gtest.h>

#include <algorithm>

#include "s3tm/s3.hpp"
#include "support/planted.hpp"

using namespace s3tm;
using namespace s3tm::testing;

namespace {

const PlantedCorpus& planted5() {
  static const PlantedCorpus pc = [] {
    PlantedConfig cfg;
    cfg.seed = 3;
    return make_planted(cfg);
  }();
  return pc;
}

S3Model fit_planted(const PlantedCorpus& pc, std::size_t k, std::uint64_t seed, const S3Options& opts = {}) {
  return fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, k, RngSeed(seed), opts);
}

S3Model model_with_scores(const Matrix& w, std::vector<std::string> terms) {
  S3Model m;
  m.n_topics = static_cast<std::size_t>(w.cols());
  m.term_topic = w;
  m.vocab.terms = std::move(terms);
  m.vocab.reindex();
  return m;
}

}  // namespace

TEST(S3Fit, RecoversPlantedAxes) {
  PlantedConfig cfg;
  cfg.n_axes = 3;
  cfg.noise = 0.01;
  cfg.filler = false;
  cfg.seed = 17;
  const PlantedCorpus pc = make_planted(cfg);
  const S3Model m = fit_planted(pc, 3, 5);
  // C maps each planted axis onto one topic: C * axes^T is a scaled permutation.
  EXPECT_LT(amari_index(Matrix(m.unmixing * pc.axes.transpose()), Matrix::Identity(3, 3)), 0.1);
  EXPECT_TRUE(m.converged);
}

TEST(S3Fit, PlantedPurity) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 1);
  const auto purity = planted_purity(positive_term_lists(describe_topics(m, 10)), pc);
  for (double p : purity.per_topic) EXPECT_GE(p, 0.8);
}

TEST(S3Fit, SingleTopic) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 1, 1);
  EXPECT_EQ(m.doc_topic.rows(), static_cast<Eigen::Index>(pc.docs.size()));
  EXPECT_EQ(m.doc_topic.cols(), 1);
  EXPECT_EQ(m.term_topic.rows(), static_cast<Eigen::Index>(pc.vocab.size()));
  EXPECT_EQ(m.term_topic.cols(), 1);
}

TEST(S3Fit, DeterministicForFixedSeed) {
  const auto& pc = planted5();
  const S3Model a = fit_planted(pc, 5, 9);
  const S3Model b = fit_planted(pc, 5, 9);
  EXPECT_EQ(a.term_topic, b.term_topic);
  EXPECT_EQ(a.doc_topic, b.doc_topic);
}

TEST(S3Fit, InputValidation) {
  const auto& pc = planted5();
  EXPECT_THROW(fit_planted(pc, 0, 1), Error);
  EXPECT_THROW(fit(pc.doc_embeddings, pc.doc_embeddings, pc.vocab, 2, RngSeed(1)), Error);
  EXPECT_THROW(fit_planted(pc, 65, 1), RankError);
}

TEST(S3Fit, SkewOrientationMakesPositivePoleTheHeavyTail) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 2);
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_GE(m.doc_topic.col(t).array().cube().sum(), 0.0);
  S3Options raw;
  raw.orient_by_skew = false;
  const S3Model r = fit_planted(pc, 5, 2, raw);
  // Same axes up to sign.
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_NEAR(std::abs(r.doc_topic.col(t).dot(m.doc_topic.col(t))),
                                                   m.doc_topic.col(t).squaredNorm(), 1e-6 * m.doc_topic.col(t).squaredNorm());
}

TEST(S3Fit, TermScoresUseCenteredEncodings) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 4);
  const Matrix v = pc.term_embeddings.to_matrix();
  EXPECT_LT((m.term_topic - (v.rowwise() - m.mean().transpose()) * m.unmixing.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  S3Options raw;
  raw.center_terms = false;
  const S3Model u = fit_planted(pc, 5, 4, raw);
  EXPECT_LT((u.term_topic - v * u.unmixing.transpose()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Transform, ReproducesTrainingScores) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 6);
  EXPECT_LT((transform(m, pc.doc_embeddings) - m.doc_topic).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Transform, MeanAndMixingColumns) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 6);
  const Matrix at_mean = transform(m, Matrix(m.mean().transpose()));
  EXPECT_LT(at_mean.cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index t = 0; t < 5; ++t) {
    const Matrix x = (m.mean() + m.mixing.col(t)).transpose();
    const Matrix s = transform(m, x);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(s(0, j), j == t ? 1.0 : 0.0, 1e-6);
  }
}

TEST(Transform, IsAffine) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 6);
  Rng rng{RngSeed(3)};
  const Matrix x1 = rng.normal_matrix(4, 64), x2 = rng.normal_matrix(4, 64);
  const double a = 0.3;
  const Matrix lhs = transform(m, Matrix(a * x1 + (1 - a) * x2));
  const Matrix rhs = a * transform(m, x1) + (1 - a) * transform(m, x2);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(transform(m, Matrix(rng.normal_matrix(2, 10))), Error);
}

TEST(Describe, SortSemantics) {
  Matrix w(3, 1);
  w << 3, -1, 2;
  const auto d = describe_topics(model_with_scores(w, {"a", "b", "c"}), 2).front();
  ASSERT_EQ(d.positive.size(), 2u);
  EXPECT_EQ(d.positive[0], (ScoredTerm{"a", 3}));
  EXPECT_EQ(d.positive[1], (ScoredTerm{"c", 2}));
  EXPECT_EQ(d.negative[0], (ScoredTerm{"b", -1}));
  EXPECT_EQ(d.negative[1], (ScoredTerm{"c", 2}));
}

TEST(Describe, FullSortAndTies) {
  Matrix w(5, 1);
  w << 1, 4, 1, 4, 0;
  const auto d = describe_topics(model_with_scores(w, {"a", "b", "c", "d", "e"}), 5).front();
  EXPECT_EQ(d.positive_terms(), (std::vector<std::string>{"b", "d", "a", "c", "e"}));
  std::vector<std::string> neg;
  for (const auto& st : d.negative) neg.push_back(st.term);
  EXPECT_EQ(neg, (std::vector<std::string>{"e", "a", "c", "b", "d"}));
  EXPECT_THROW(describe_topics(model_with_scores(w, {"a", "b", "c", "d", "e"}), 0), Error);
  EXPECT_THROW(describe_topics(model_with_scores(w, {"a", "b", "c", "d", "e"}), 6), Error);
}

TEST(Describe, SignFlipSwapsPoles) {
  const auto& pc = planted5();
  S3Model m = fit_planted(pc, 5, 8);
  const auto before = describe_topics(m, 10);
  m.flip_topic(2);
  const auto after = describe_topics(m, 10);
  for (std::size_t t = 0; t < 5; ++t) {
    if (t != 2) {
      EXPECT_EQ(after[t], before[t]);
      continue;
    }
    ASSERT_EQ(after[t].positive.size(), before[t].negative.size());
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(after[t].positive[i].term, before[t].negative[i].term);
      EXPECT_EQ(after[t].positive[i].score, -before[t].negative[i].score);
      EXPECT_EQ(after[t].negative[i].term, before[t].positive[i].term);
    }
  }
}

TEST(Describe, InvariantToVocabularyPermutation) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 8);
  // Reverse the vocabulary and the term-embedding rows together.
  Vocabulary rv = pc.vocab;
  std::reverse(rv.terms.begin(), rv.terms.end());
  std::reverse(rv.doc_freq.begin(), rv.doc_freq.end());
  std::reverse(rv.total_count.begin(), rv.total_count.end());
  rv.reindex();
  const Matrix v = pc.term_embeddings.to_matrix();
  const Matrix rev = v.colwise().reverse();
  const S3Model r = fit(pc.doc_embeddings, EmbeddingMatrix::from_matrix(rev), rv, 5, RngSeed(8));
  const auto a = describe_topics(m, 10), b = describe_topics(r, 10);
  for (std::size_t t = 0; t < 5; ++t) {
    // Scores attach to terms; only exact ties could reorder, and there are none here.
    EXPECT_EQ(a[t].positive_terms(), b[t].positive_terms());
  }
}

TEST(Compass, CoordinatesAreTermScores) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 8);
  const Compass c = compass(m, 1, 3);
  ASSERT_EQ(c.points.size(), pc.vocab.size());
  EXPECT_FALSE(c.same_axis);
  for (std::size_t j = 0; j < c.points.size(); ++j) {
    EXPECT_EQ(c.points[j].term, pc.vocab.terms[j]);
    EXPECT_EQ(c.points[j].x, m.term_topic(static_cast<Eigen::Index>(j), 1));
    EXPECT_EQ(c.points[j].y, m.term_topic(static_cast<Eigen::Index>(j), 3));
  }
}

TEST(Compass, SameAxisAndFilter) {
  const auto& pc = planted5();
  const S3Model m = fit_planted(pc, 5, 8);
  const Compass diag = compass(m, 2, 2);
  EXPECT_TRUE(diag.same_axis);
  for (const auto& p : diag.points) EXPECT_EQ(p.x, p.y);
  const std::vector<std::string> three = {pc.vocab.terms[5], pc.vocab.terms[0], pc.vocab.terms[9]};
  const Compass f = compass(m, 0, 1, three);
  ASSERT_EQ(f.points.size(), 3u);
  EXPECT_EQ(f.points[0].term, three[0]);
  EXPECT_THROW(compass(m, 0, 1, std::vector<std::string>{"nope"}), Error);
  EXPECT_THROW(compass(m, 0, 5), Error);
}
