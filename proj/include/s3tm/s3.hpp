#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "s3tm/common.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/embed.hpp"
#include "s3tm/numerics.hpp"
#include "s3tm/topics.hpp"

namespace s3tm {

struct S3Options {
  IcaOptions ica;
  // Subtract the document training mean from term encodings before scoring.
  // When false, term scores use the raw product V C^T.
  bool center_terms = true;
  // Flip each axis so its document scores have nonnegative skewness, putting
  // the heavy tail of strongly-on-topic documents on the positive pole.
  // When false, FastICA's arbitrary signs are kept.
  bool orient_by_skew = true;
};

// Fitted model. Documents and terms are scored by one affine map,
// s = C (x - mean).
struct S3Model {
  std::size_t n_topics = 0;
  Whitener whitener;
  Matrix mixing;      // d x k  (A)
  Matrix unmixing;    // k x d  (C = A^+)
  Matrix doc_topic;   // n x k  (S)
  Matrix term_topic;  // |vocab| x k  (W)
  Vocabulary vocab;
  RngSeed seed;
  double fit_runtime = 0.0;
  bool center_terms = true;
  bool orient_by_skew = true;
  int n_iter = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::size_t dims() const { return static_cast<std::size_t>(unmixing.cols()); }
  const Vector& mean() const { return whitener.mean; }

  // Negates topic t everywhere (A column, C row, S and W columns).
  void flip_topic(std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    mixing.col(i) *= -1.0;
    unmixing.row(i) *= -1.0;
    doc_topic.col(i) *= -1.0;
    term_topic.col(i) *= -1.0;
  }
};

inline Matrix score_terms(const Matrix& term_embeddings, const Matrix& unmixing, const Vector& mean,
                          bool center) {
  if (center) return (term_embeddings.rowwise() - mean.transpose()) * unmixing.transpose();
  return term_embeddings * unmixing.transpose();
}

inline S3Model fit(const EmbeddingMatrix& docs, const EmbeddingMatrix& terms, const Vocabulary& vocab,
                   std::size_t n_topics, RngSeed seed, const S3Options& opts = {}) {
  if (docs.dims != terms.dims)
    fail("document embeddings have ", docs.dims, " dims but term embeddings have ", terms.dims);
  if (terms.rows != vocab.size())
    fail("term embeddings have ", terms.rows, " rows for a vocabulary of ", vocab.size());
  if (n_topics < 1) fail("n_topics must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  const Matrix x = docs.to_matrix();
  IcaResult ica = fastica(x, static_cast<Eigen::Index>(n_topics), seed, opts.ica);

  S3Model model;
  model.n_topics = n_topics;
  model.whitener = std::move(ica.whitener);
  model.mixing = std::move(ica.mixing);
  model.unmixing = std::move(ica.unmixing);
  model.doc_topic = std::move(ica.sources);
  model.term_topic = score_terms(terms.to_matrix(), model.unmixing, model.whitener.mean, opts.center_terms);
  model.vocab = vocab;
  model.seed = seed;
  model.center_terms = opts.center_terms;
  model.orient_by_skew = opts.orient_by_skew;
  model.n_iter = ica.n_iter;
  model.converged = ica.converged;
  model.warnings = std::move(ica.warnings);
  if (opts.orient_by_skew) {
    for (std::size_t t = 0; t < n_topics; ++t) {
      const auto col = model.doc_topic.col(static_cast<Eigen::Index>(t));
      if (col.array().cube().sum() < 0.0) model.flip_topic(t);
    }
  }
  model.fit_runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

inline Matrix transform(const S3Model& model, const Matrix& x_new) {
  if (static_cast<std::size_t>(x_new.cols()) != model.dims())
    fail("transform: embeddings have ", x_new.cols(), " dims, model expects ", model.dims());
  return (x_new.rowwise() - model.mean().transpose()) * model.unmixing.transpose();
}

inline Matrix transform(const S3Model& model, const EmbeddingMatrix& x_new) {
  return transform(model, x_new.to_matrix());
}

inline std::vector<TopicDescription> describe_topics(const S3Model& model, std::size_t top_k) {
  return rank_terms(model.term_topic, model.vocab.terms, top_k, /*with_negative=*/true);
}

struct CompassPoint {
  std::string term;
  double x = 0.0;
  double y = 0.0;
};

struct Compass {
  std::size_t axis_x = 0;
  std::size_t axis_y = 0;
  bool same_axis = false;  // x == y for every point
  std::vector<CompassPoint> points;
};

// Term coordinates along two topic axes, read directly from W. With no filter
// every vocabulary term is returned in id order.
inline Compass compass(const S3Model& model, std::size_t axis_x, std::size_t axis_y,
                       const std::optional<std::vector<std::string>>& terms = std::nullopt) {
  if (axis_x >= model.n_topics || axis_y >= model.n_topics)
    fail("compass axes (", axis_x, ", ", axis_y, ") out of range for ", model.n_topics, " topics");
  Compass out;
  out.axis_x = axis_x;
  out.axis_y = axis_y;
  out.same_axis = axis_x == axis_y;
  const auto cx = static_cast<Eigen::Index>(axis_x);
  const auto cy = static_cast<Eigen::Index>(axis_y);
  auto point = [&](std::size_t id) {
    const auto r = static_cast<Eigen::Index>(id);
    return CompassPoint{model.vocab.terms[id], model.term_topic(r, cx), model.term_topic(r, cy)};
  };
  if (!terms) {
    out.points.reserve(model.vocab.size());
    for (std::size_t id = 0; id < model.vocab.size(); ++id) out.points.push_back(point(id));
    return out;
  }
  for (const auto& term : *terms) {
    auto id = model.vocab.find(term);
    if (!id) fail("compass: unknown term '", term, "'");
    out.points.push_back(point(*id));
  }
  return out;
}

}  // namespace s3tm
