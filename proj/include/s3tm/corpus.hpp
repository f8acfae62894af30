#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "s3tm/common.hpp"
#include "s3tm/utf8.hpp"

namespace s3tm {

struct Document {
  std::string id;
  std::string text;

  // Empty documents are kept so row indices stay aligned with embeddings.
  bool is_blank() const {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c); });
  }
};

enum class CorpusFormat { jsonl, plaintext_dir };

using TokenList = std::vector<std::string>;

// Lowercased maximal runs of Unicode alphanumerics and underscores. Apostrophes
// and hyphens are kept only between two word characters. Tokens shorter than
// two code points are dropped.
inline TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  std::size_t current_len = 0;
  auto flush = [&] {
    if (current_len >= 2) tokens.push_back(current);
    current.clear();
    current_len = 0;
  };
  auto is_word = [](char32_t cp) { return cp == U'_' || utf8::is_alnum(cp); };
  auto is_joiner = [](char32_t cp) { return cp == U'\'' || cp == U'’' || cp == U'-'; };

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto cp = utf8::decode(text, pos);
    if (!cp) {
      // Stray invalid byte: treat as a separator.
      ++pos;
      flush();
      continue;
    }
    if (is_word(*cp)) {
      utf8::encode(utf8::to_lower(*cp), current);
      ++current_len;
      continue;
    }
    if (is_joiner(*cp) && current_len > 0) {
      std::size_t peek = pos;
      auto next = utf8::decode(text, peek);
      if (next && is_word(*next)) {
        utf8::encode(*cp, current);
        ++current_len;
        continue;
      }
    }
    flush();
  }
  flush();
  return tokens;
}

inline std::vector<TokenList> tokenize_all(const std::vector<Document>& docs) {
  std::vector<TokenList> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(tokenize(d.text));
  return out;
}

namespace detail {

inline Document make_document(std::string id, std::string text, std::string_view where) {
  if (auto bad = utf8::find_invalid(text))
    fail(where, ": invalid UTF-8 in text at byte ", *bad);
  return Document{std::move(id), std::move(text)};
}

inline std::vector<Document> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open corpus file ", path.string());
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = detail::concat(path.string(), ":", line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(where, ": malformed JSON line (", e.what(), ")");
    }
    if (!obj.is_object()) fail(where, ": expected a JSON object");
    auto text_it = obj.find("text");
    if (text_it == obj.end() || !text_it->is_string())
      fail(where, ": missing string field \"text\"");
    std::string id;
    if (auto id_it = obj.find("id"); id_it != obj.end()) {
      if (!id_it->is_string()) fail(where, ": field \"id\" must be a string");
      id = id_it->get<std::string>();
    } else {
      id = std::to_string(line_no);
    }
    if (!seen.insert(id).second) fail(where, ": duplicate document id \"", id, "\"");
    docs.push_back(make_document(std::move(id), text_it->get<std::string>(), where));
  }
  return docs;
}

inline std::vector<Document> load_plaintext_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail("not a directory: ", dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) fail("cannot open ", f.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // Stems are unique because filenames in one directory are unique.
    docs.push_back(make_document(f.stem().string(), std::move(text), f.string()));
  }
  return docs;
}

}  // namespace detail

inline std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (!std::filesystem::exists(path)) fail("corpus path does not exist: ", path.string());
  return format == CorpusFormat::jsonl ? detail::load_jsonl(path)
                                       : detail::load_plaintext_dir(path);
}

inline CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "plaintext-dir" || name == "dir") return CorpusFormat::plaintext_dir;
  fail("unknown corpus format '", name, "' (expected jsonl or plaintext-dir)");
}

// Per-term corpus statistics, terms in first-occurrence order.
struct TermStats {
  std::vector<std::string> terms;
  std::vector<std::uint32_t> doc_freq;
  std::vector<std::uint64_t> total_count;
  std::size_t n_docs = 0;
  std::uint64_t n_tokens = 0;
};

inline TermStats count_terms(const std::vector<TokenList>& corpus) {
  TermStats stats;
  stats.n_docs = corpus.size();
  // Keys view tokens owned by `corpus`, which outlives the map.
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::size_t> last_doc;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& tok : corpus[d]) {
      auto [it, inserted] = index.try_emplace(tok, stats.terms.size());
      if (inserted) {
        stats.terms.push_back(tok);
        stats.doc_freq.push_back(0);
        stats.total_count.push_back(0);
        last_doc.push_back(SIZE_MAX);
      }
      const std::size_t id = it->second;
      ++stats.total_count[id];
      if (last_doc[id] != d) {
        last_doc[id] = d;
        ++stats.doc_freq[id];
      }
      ++stats.n_tokens;
    }
  }
  return stats;
}

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::uint32_t> term_to_id;
  std::vector<std::uint32_t> doc_freq;
  std::vector<std::uint64_t> total_count;
  std::size_t n_docs = 0;

  std::size_t size() const { return terms.size(); }

  std::optional<std::uint32_t> find(std::string_view term) const {
    auto it = term_to_id.find(std::string(term));
    if (it == term_to_id.end()) return std::nullopt;
    return it->second;
  }

  // Rebuilds term_to_id from terms.
  void reindex() {
    term_to_id.clear();
    term_to_id.reserve(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i)
      term_to_id.emplace(terms[i], static_cast<std::uint32_t>(i));
  }
};

inline Vocabulary build_vocabulary(const std::vector<TokenList>& corpus, std::size_t min_df,
                                   double max_df_ratio) {
  if (min_df < 1) fail("min_df must be >= 1");
  if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) fail("max_df_ratio must be in (0, 1]");
  if (corpus.empty()) fail("cannot build a vocabulary from an empty corpus");
  const TermStats stats = count_terms(corpus);
  Vocabulary vocab;
  vocab.n_docs = stats.n_docs;
  const double n = static_cast<double>(stats.n_docs);
  for (std::size_t i = 0; i < stats.terms.size(); ++i) {
    if (stats.doc_freq[i] < min_df) continue;
    if (static_cast<double>(stats.doc_freq[i]) / n > max_df_ratio) continue;
    vocab.terms.push_back(stats.terms[i]);
    vocab.doc_freq.push_back(stats.doc_freq[i]);
    vocab.total_count.push_back(stats.total_count[i]);
  }
  if (vocab.terms.empty())
    fail("no term survives min_df=", min_df, " and max_df_ratio=", max_df_ratio);
  vocab.reindex();
  return vocab;
}

inline Vocabulary build_vocabulary(const std::vector<Document>& docs, std::size_t min_df,
                                   double max_df_ratio) {
  return build_vocabulary(tokenize_all(docs), min_df, max_df_ratio);
}

enum class Weighting { count, tfidf };

struct BowMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> data;  // n_docs x |vocab|
  Weighting weighting = Weighting::count;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
};

inline BowMatrix bow_counts(const std::vector<TokenList>& corpus, const Vocabulary& vocab,
                            Weighting weighting) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::unordered_map<std::uint32_t, double> row;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    row.clear();
    for (const auto& tok : corpus[d])
      if (auto it = vocab.term_to_id.find(tok); it != vocab.term_to_id.end()) row[it->second] += 1.0;
    std::vector<std::pair<std::uint32_t, double>> entries(row.begin(), row.end());
    std::sort(entries.begin(), entries.end());
    if (weighting == Weighting::tfidf) {
      double norm2 = 0.0;
      for (auto& [t, v] : entries) {
        const double idf = 1.0 + std::log(static_cast<double>(vocab.n_docs) /
                                          (1.0 + static_cast<double>(vocab.doc_freq[t])));
        v *= idf;
        norm2 += v * v;
      }
      if (norm2 > 0.0)
        for (auto& e : entries) e.second /= std::sqrt(norm2);
    }
    for (const auto& [t, v] : entries)
      triplets.emplace_back(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t), v);
  }
  BowMatrix bow;
  bow.weighting = weighting;
  bow.data.resize(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(vocab.size()));
  bow.data.setFromTriplets(triplets.begin(), triplets.end());
  bow.data.makeCompressed();
  return bow;
}

inline BowMatrix bow_counts(const std::vector<Document>& docs, const Vocabulary& vocab,
                            Weighting weighting) {
  return bow_counts(tokenize_all(docs), vocab, weighting);
}

}  // namespace s3tm
