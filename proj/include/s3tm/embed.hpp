#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "s3tm/binary_io.hpp"
#include "s3tm/common.hpp"
#include "s3tm/corpus.hpp"

namespace s3tm {

// Dense row-major matrix with 32-bit storage. Rows are documents or terms.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<float> data;
  std::vector<std::string> row_labels;  // empty, or one label per row

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t r, std::size_t d) : rows(r), dims(d), data(r * d, 0.0f) {}

  float& at(std::size_t r, std::size_t c) { return data[r * dims + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * dims + c]; }
  bool has_labels() const { return !row_labels.empty(); }

  Matrix to_matrix() const {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < dims; ++c) m(r, c) = static_cast<double>(at(r, c));
    return m;
  }

  static EmbeddingMatrix from_matrix(const Matrix& m) {
    EmbeddingMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (std::size_t r = 0; r < out.rows; ++r)
      for (std::size_t c = 0; c < out.dims; ++c) out.at(r, c) = static_cast<float>(m(r, c));
    return out;
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

enum class EmbeddingFormat { emb1, csv };

inline EmbeddingFormat embedding_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? EmbeddingFormat::csv : EmbeddingFormat::emb1;
}

namespace detail {

inline constexpr std::string_view kEmb1Magic = "EMB1";

inline std::string encode_emb1(const EmbeddingMatrix& m) {
  binary::Writer w;
  w.bytes(kEmb1Magic);
  w.u32(static_cast<std::uint32_t>(m.rows));
  w.u32(static_cast<std::uint32_t>(m.dims));
  w.u8(m.has_labels() ? 1 : 0);
  for (const auto& label : m.row_labels) {
    w.u32(static_cast<std::uint32_t>(label.size()));
    w.bytes(label);
  }
  for (float v : m.data) w.f32(v);
  return w.data();
}

inline EmbeddingMatrix decode_emb1(std::string_view bytes, const std::string& context) {
  binary::Reader r(bytes, context);
  if (bytes.substr(0, 4) != kEmb1Magic) r.error("bad magic (expected \"EMB1\")");
  r.bytes(4);
  EmbeddingMatrix m;
  m.rows = r.u32();
  m.dims = r.u32();
  const std::uint8_t has_labels = r.u8();
  if (has_labels > 1) r.error("invalid has_labels flag");
  if (has_labels) {
    m.row_labels.reserve(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
      const std::uint32_t len = r.u32();
      m.row_labels.emplace_back(r.bytes(len));
    }
  }
  const std::size_t count = m.rows * m.dims;
  if (r.remaining() < count * 4)
    r.error(concat("truncated payload: expected ", count * 4, " bytes, found ", r.remaining()));
  m.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    m.data[i] = r.f32();
    if (!std::isfinite(m.data[i]))
      fail(context, ": non-finite value at byte offset ", at, " (row ", i / m.dims, ", column ",
           i % m.dims, ")");
  }
  if (r.remaining() != 0) r.error("unexpected trailing bytes");
  return m;
}

inline EmbeddingMatrix parse_csv(std::string_view text, const std::string& context) {
  EmbeddingMatrix m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view field = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      float v = 0.0f;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        fail(context, ":", line_no, ": cannot parse number '", field, "'");
      if (!std::isfinite(v)) fail(context, ":", line_no, ": non-finite value");
      m.data.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (m.rows == 0) m.dims = fields;
    else if (fields != m.dims)
      fail(context, ":", line_no, ": expected ", m.dims, " columns, found ", fields);
    ++m.rows;
  }
  return m;
}

}  // namespace detail

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string bytes = binary::read_file(path);
  return format == EmbeddingFormat::emb1 ? detail::decode_emb1(bytes, path.string())
                                         : detail::parse_csv(bytes, path.string());
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return load_embeddings(path, embedding_format_for(path));
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  if (m.rows == 0 || m.dims == 0) fail("empty matrix");
  if (m.data.size() != m.rows * m.dims) fail("embedding data length does not match shape");
  if (m.has_labels() && m.row_labels.size() != m.rows) fail("row label count does not match rows");
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (!std::isfinite(m.data[i]))
      fail("refusing to write non-finite value at row ", i / m.dims, ", column ", i % m.dims);
  if (embedding_format_for(path) == EmbeddingFormat::csv) {
    std::string out;
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.dims; ++c) {
        if (c) out.push_back(',');
        out += format_shortest(m.at(r, c));
      }
      out.push_back('\n');
    }
    binary::write_file_atomic(path, out);
  } else {
    binary::write_file_atomic(path, detail::encode_emb1(m));
  }
}

// Token -> vector lookup with one fixed dimensionality.
class WordVectorTable {
 public:
  explicit WordVectorTable(std::size_t dims = 0) : dims_(dims) {}

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Later inserts of the same token overwrite.
  void set(std::string_view token, std::span<const float> vec) {
    if (dims_ == 0 && tokens_.empty()) dims_ = vec.size();
    if (vec.size() != dims_) fail("vector for '", token, "' has ", vec.size(), " dims, table has ", dims_);
    auto [it, inserted] = index_.try_emplace(std::string(token), tokens_.size());
    if (inserted) {
      tokens_.emplace_back(token);
      data_.insert(data_.end(), vec.begin(), vec.end());
    } else {
      std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dims_));
    }
  }

  const float* find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return nullptr;
    return data_.data() + it->second * dims_;
  }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }

 private:
  std::size_t dims_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

// GloVe-style text: token followed by whitespace-separated floats. A leading
// word2vec header line of two integers ("count dims") is skipped.
inline WordVectorTable parse_word_vectors(std::string_view text, const std::string& context) {
  WordVectorTable table;
  std::size_t dims = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<float> vec;
  std::vector<std::string_view> fields;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    fields.clear();
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) fields.push_back(line.substr(i, j - i));
      i = j;
    }
    if (fields.empty()) continue;
    auto is_uint = [](std::string_view f) {
      return !f.empty() && std::all_of(f.begin(), f.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (line_no == 1 && fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) continue;
    if (fields.size() < 2) fail(context, ":", line_no, ": expected a token followed by values");
    if (dims == 0) dims = fields.size() - 1;
    if (fields.size() - 1 != dims)
      fail(context, ":", line_no, ": expected ", dims, " values, found ", fields.size() - 1);
    vec.resize(dims);
    for (std::size_t k = 0; k < dims; ++k) {
      auto f = fields[k + 1];
      auto res = std::from_chars(f.data(), f.data() + f.size(), vec[k]);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
        fail(context, ":", line_no, ": cannot parse number '", f, "'");
      if (!std::isfinite(vec[k])) fail(context, ":", line_no, ": non-finite value");
    }
    table.set(fields[0], vec);
  }
  return table;
}

inline WordVectorTable load_word_vectors(const std::filesystem::path& path) {
  return parse_word_vectors(binary::read_file(path), path.string());
}

inline void save_word_vectors(const WordVectorTable& table, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.tokens()[i];
    for (float v : table.row(i)) {
      out.push_back(' ');
      out += format_shortest(v);
    }
    out.push_back('\n');
  }
  binary::write_file_atomic(path, out);
}

// Row i is the mean of the table vectors of document i's in-table tokens, or
// zero when it has none.
inline EmbeddingMatrix encode_documents_static(const std::vector<TokenList>& corpus,
                                               const WordVectorTable& table) {
  if (table.empty()) fail("word-vector table is empty");
  const std::size_t d = table.dims();
  EmbeddingMatrix out(corpus.size(), d);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t hits = 0;
    for (const auto& tok : corpus[i]) {
      const float* v = table.find(tok);
      if (!v) continue;
      for (std::size_t c = 0; c < d; ++c) acc[c] += v[c];
      ++hits;
    }
    if (hits == 0) continue;
    for (std::size_t c = 0; c < d; ++c) out.at(i, c) = static_cast<float>(acc[c] / static_cast<double>(hits));
  }
  return out;
}

inline EmbeddingMatrix encode_documents_static(const std::vector<Document>& docs,
                                               const WordVectorTable& table) {
  auto out = encode_documents_static(tokenize_all(docs), table);
  out.row_labels.reserve(docs.size());
  for (const auto& d : docs) out.row_labels.push_back(d.id);
  return out;
}

struct VocabularyEncoding {
  EmbeddingMatrix matrix;            // |vocab| x dims, labelled with the terms
  std::vector<std::string> missing;  // terms that received a zero vector
};

// Static provider: vocabulary terms are looked up in the table; absent terms
// get a zero row and are reported.
inline VocabularyEncoding encode_vocabulary(const Vocabulary& vocab, const WordVectorTable& table) {
  if (table.empty()) fail("word-vector table is empty");
  VocabularyEncoding enc;
  enc.matrix = EmbeddingMatrix(vocab.size(), table.dims());
  enc.matrix.row_labels = vocab.terms;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    const float* v = table.find(vocab.terms[t]);
    if (!v) {
      enc.missing.push_back(vocab.terms[t]);
      continue;
    }
    std::copy(v, v + table.dims(), enc.matrix.data.begin() + static_cast<std::ptrdiff_t>(t * table.dims()));
  }
  return enc;
}

// Precomputed provider: rows are gathered by label. Extra rows are ignored.
inline EmbeddingMatrix encode_vocabulary(const Vocabulary& vocab, const EmbeddingMatrix& labelled) {
  if (!labelled.has_labels()) fail("precomputed term embeddings carry no row labels");
  std::unordered_map<std::string_view, std::size_t> by_label;
  by_label.reserve(labelled.rows);
  for (std::size_t r = 0; r < labelled.rows; ++r) by_label.insert_or_assign(labelled.row_labels[r], r);
  EmbeddingMatrix out(vocab.size(), labelled.dims);
  out.row_labels = vocab.terms;
  std::vector<std::string> missing;
  std::size_t n_missing = 0;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    auto it = by_label.find(vocab.terms[t]);
    if (it == by_label.end()) {
      if (missing.size() < 10) missing.push_back(vocab.terms[t]);
      ++n_missing;
      continue;
    }
    std::copy_n(labelled.data.begin() + static_cast<std::ptrdiff_t>(it->second * labelled.dims),
                labelled.dims, out.data.begin() + static_cast<std::ptrdiff_t>(t * labelled.dims));
  }
  if (n_missing > 0) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    fail("precomputed term embeddings miss ", n_missing, " vocabulary terms: ", list,
         n_missing > missing.size() ? ", ..." : "");
  }
  return out;
}

}  // namespace s3tm
