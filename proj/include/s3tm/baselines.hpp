#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "s3tm/common.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/numerics.hpp"
#include "s3tm/topics.hpp"

namespace s3tm {

struct NmfOptions {
  int max_iter = 200;
  double tol = 1e-4;  // stop when (previous - current) / initial loss < tol
};

struct NmfModel {
  Matrix doc_weights;   // n x k, nonnegative
  Matrix topic_terms;   // k x |vocab|, nonnegative
  int n_iter = 0;
  bool converged = false;
  double final_loss = 0.0;            // ||B - W H||_F
  std::vector<double> loss_history;   // entry 0 is the initial loss
};

namespace detail {

// NNDSVD with zeros replaced by the mean of B ("nndsvda"). The factors only
// seed the updates, so a few subspace iterations suffice.
inline void nndsvd_init(const SparseRowMatrix& b, Eigen::Index k, RngSeed seed, Matrix& w, Matrix& h) {
  const TruncatedSvdResult f = truncated_svd(b, k, seed, /*max_iter=*/8);
  const Eigen::Index n = b.rows();
  const Eigen::Index m = b.cols();
  w = Matrix::Zero(n, k);
  h = Matrix::Zero(k, m);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Vector u = f.U.col(j);
    const Vector v = f.Vt.row(j).transpose();
    if (j == 0) {
      w.col(0) = std::sqrt(f.s(0)) * u.cwiseAbs();
      h.row(0) = std::sqrt(f.s(0)) * v.cwiseAbs().transpose();
      continue;
    }
    const Vector up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
    const Vector vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
    const double up_n = up.norm(), un_n = un.norm(), vp_n = vp.norm(), vn_n = vn.norm();
    const double pos = up_n * vp_n, neg = un_n * vn_n;
    if (std::max(pos, neg) <= 0.0) continue;
    const bool use_pos = pos >= neg;
    const Vector& uu = use_pos ? up : un;
    const Vector& vv = use_pos ? vp : vn;
    const double sigma = use_pos ? pos : neg;
    const double scale = std::sqrt(f.s(j) * sigma);
    w.col(j) = scale * uu / (use_pos ? up_n : un_n);
    h.row(j) = scale * vv.transpose() / (use_pos ? vp_n : vn_n);
  }
  const double avg = b.sum() / static_cast<double>(n * m);
  w = (w.array() <= 0.0).select(avg, w);
  h = (h.array() <= 0.0).select(avg, h);
}

}  // namespace detail

// Frobenius-loss NMF with Lee-Seung multiplicative updates.
inline NmfModel fit_nmf(const BowMatrix& bow, std::size_t k, RngSeed seed, const NmfOptions& opts = {}) {
  const SparseRowMatrix& b = bow.data;
  if (k < 1) fail("NMF needs k >= 1");
  if (static_cast<Eigen::Index>(k) > std::min(b.rows(), b.cols()))
    fail("NMF needs k <= min(n_docs, n_terms), got k=", k);
  double b_norm2 = 0.0;
  for (Eigen::Index i = 0; i < b.nonZeros(); ++i) {
    const double v = b.valuePtr()[i];
    if (v < 0.0) fail("NMF input has a negative entry");
    b_norm2 += v * v;
  }
  if (b_norm2 == 0.0) fail("NMF input is all zeros");

  const auto kk = static_cast<Eigen::Index>(k);
  const SparseRowMatrix bt = b.transpose();
  constexpr double eps = 1e-12;
  NmfModel model;
  Matrix& w = model.doc_weights;
  Matrix& h = model.topic_terms;
  detail::nndsvd_init(b, kk, seed, w, h);

  // ||B - WH||^2 = ||B||^2 - 2 <B H^T, W> + <H H^T, W^T W>
  auto loss_of = [&](const Matrix& bht, const Matrix& hht, const Matrix& wtw) {
    const double sq = b_norm2 - 2.0 * bht.cwiseProduct(w).sum() + hht.cwiseProduct(wtw).sum();
    return std::sqrt(std::max(sq, 0.0));
  };
  Matrix bht = b * h.transpose();
  Matrix hht = h * h.transpose();
  Matrix wtw = w.transpose() * w;
  model.loss_history.push_back(loss_of(bht, hht, wtw));
  const double initial = model.loss_history.front();

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Matrix wtb = (bt * w).transpose();  // k x m
    h.array() *= wtb.array() / ((wtw * h).array() + eps);
    bht = b * h.transpose();
    hht = h * h.transpose();
    w.array() *= bht.array() / ((w * hht).array() + eps);
    wtw = w.transpose() * w;
    const double loss = loss_of(bht, hht, wtw);
    if (!std::isfinite(loss)) throw NumericError(detail::concat("NMF: non-finite loss at iteration ", it));
    const double prev = model.loss_history.back();
    model.loss_history.push_back(loss);
    model.n_iter = it;
    if (initial > 0.0 && (prev - loss) / initial < opts.tol) {
      model.converged = true;
      break;
    }
  }
  model.final_loss = model.loss_history.back();
  return model;
}

struct LsaModel {
  Matrix doc_scores;    // n x k  (U S)
  Matrix term_scores;   // |vocab| x k  (V)
  Vector singular_values;
  std::size_t effective_components = 0;  // singular values above tolerance
  bool rank_deficient = false;
};

inline LsaModel fit_lsa(const BowMatrix& bow, std::size_t k) {
  const SparseRowMatrix& b = bow.data;
  if (k < 1) fail("LSA needs k >= 1");
  const auto full = static_cast<std::size_t>(std::min(b.rows(), b.cols()));
  if (k > full) fail("LSA needs k <= min(n_docs, n_terms) = ", full, ", got ", k);
  const TruncatedSvdResult f = truncated_svd(b, static_cast<Eigen::Index>(k), RngSeed(0));
  LsaModel model;
  model.singular_values = f.s;
  model.doc_scores = f.U * f.s.asDiagonal();
  model.term_scores = f.Vt.transpose();
  const double tol = static_cast<double>(std::max(b.rows(), b.cols())) *
                     std::numeric_limits<double>::epsilon() * (f.s.size() ? f.s(0) : 0.0);
  model.effective_components = static_cast<std::size_t>((f.s.array() > tol).count());
  model.rank_deficient = model.effective_components < k;
  return model;
}

inline std::vector<TopicDescription> describe_topics_baseline(const NmfModel& model,
                                                              const Vocabulary& vocab,
                                                              std::size_t top_k) {
  return rank_terms(model.topic_terms.transpose(), vocab.terms, top_k, /*with_negative=*/false);
}

inline std::vector<TopicDescription> describe_topics_baseline(const LsaModel& model,
                                                              const Vocabulary& vocab,
                                                              std::size_t top_k) {
  return rank_terms(model.term_scores, vocab.terms, top_k, /*with_negative=*/true);
}

}  // namespace s3tm
