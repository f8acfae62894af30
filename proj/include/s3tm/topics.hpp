#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "s3tm/common.hpp"

namespace s3tm {

struct ScoredTerm {
  std::string term;
  double score = 0.0;

  friend bool operator==(const ScoredTerm&, const ScoredTerm&) = default;
};

struct TopicDescription {
  std::size_t topic_id = 0;
  std::vector<ScoredTerm> positive;  // descending score
  std::vector<ScoredTerm> negative;  // ascending score

  std::vector<std::string> positive_terms() const {
    std::vector<std::string> out;
    out.reserve(positive.size());
    for (const auto& st : positive) out.push_back(st.term);
    return out;
  }

  std::vector<std::string> negative_terms() const {
    std::vector<std::string> out;
    out.reserve(negative.size());
    for (const auto& st : negative) out.push_back(st.term);
    return out;
  }

  friend bool operator==(const TopicDescription&, const TopicDescription&) = default;
};

// Ranks the terms of every column of `scores` (|vocab| x k). Ties resolve to
// the lower vocabulary id in both directions.
inline std::vector<TopicDescription> rank_terms(const Matrix& scores,
                                                const std::vector<std::string>& terms,
                                                std::size_t top_k, bool with_negative) {
  const auto n_terms = static_cast<std::size_t>(scores.rows());
  if (n_terms != terms.size()) fail("score matrix has ", n_terms, " rows for ", terms.size(), " terms");
  if (top_k < 1 || top_k > n_terms) fail("top_k must be in [1, ", n_terms, "], got ", top_k);
  std::vector<TopicDescription> out;
  out.reserve(static_cast<std::size_t>(scores.cols()));
  std::vector<std::size_t> ids(n_terms);
  const auto k = static_cast<std::ptrdiff_t>(top_k);
  for (Eigen::Index t = 0; t < scores.cols(); ++t) {
    TopicDescription desc;
    desc.topic_id = static_cast<std::size_t>(t);
    const auto col = scores.col(t);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](std::size_t a, std::size_t b) {
      return col(a) != col(b) ? col(a) > col(b) : a < b;
    });
    for (std::size_t i = 0; i < top_k; ++i) desc.positive.push_back({terms[ids[i]], col(ids[i])});
    if (with_negative) {
      std::iota(ids.begin(), ids.end(), std::size_t{0});
      std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](std::size_t a, std::size_t b) {
        return col(a) != col(b) ? col(a) < col(b) : a < b;
      });
      for (std::size_t i = 0; i < top_k; ++i) desc.negative.push_back({terms[ids[i]], col(ids[i])});
    }
    out.push_back(std::move(desc));
  }
  return out;
}

inline std::vector<std::vector<std::string>> positive_term_lists(
    const std::vector<TopicDescription>& topics) {
  std::vector<std::vector<std::string>> out;
  out.reserve(topics.size());
  for (const auto& t : topics) out.push_back(t.positive_terms());
  return out;
}

}  // namespace s3tm
