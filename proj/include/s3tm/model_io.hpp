#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "s3tm/binary_io.hpp"
#include "s3tm/s3.hpp"

// Model file layout (all integers and floats little-endian):
//
//   "S3TM"                  magic
//   u32 header_length
//   header_length bytes     UTF-8 JSON: version, shapes, seed, vocabulary, ...
//   f64 sections            mean, whitening, whitening_inverse, mixing,
//                           unmixing, doc_topic, term_topic; row-major
//   u32 crc32               over every preceding byte

namespace s3tm {

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (!bytes.empty()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size(), 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), chunk);
    bytes.remove_prefix(chunk);
  }
  return static_cast<std::uint32_t>(crc);
}

// FNV-1a over the newline-joined term list.
inline std::uint64_t vocabulary_hash(const Vocabulary& vocab) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& term : vocab.terms) {
    for (unsigned char c : term) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

inline void write_matrix(binary::Writer& w, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

inline Matrix read_matrix(binary::Reader& r, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

}  // namespace detail

inline std::string encode_model(const S3Model& m) {
  const auto k = static_cast<std::size_t>(m.n_topics);
  nlohmann::json header = {
      {"format", "s3tm-model"},
      {"version", kModelFormatVersion},
      {"n_topics", k},
      {"dims", m.dims()},
      {"n_docs", static_cast<std::size_t>(m.doc_topic.rows())},
      {"n_terms", static_cast<std::size_t>(m.term_topic.rows())},
      {"seed", m.seed.value},
      {"fit_runtime", m.fit_runtime},
      {"center_terms", m.center_terms},
      {"orient_by_skew", m.orient_by_skew},
      {"n_iter", m.n_iter},
      {"converged", m.converged},
      {"warnings", m.warnings},
      {"vocab_hash", detail::hex64(vocabulary_hash(m.vocab))},
      {"vocabulary",
       {{"n_docs", m.vocab.n_docs},
        {"terms", m.vocab.terms},
        {"doc_freq", m.vocab.doc_freq},
        {"total_count", m.vocab.total_count}}},
      {"sections",
       {"mean", "whitening", "whitening_inverse", "mixing", "unmixing", "doc_topic", "term_topic"}},
  };
  const std::string header_text = header.dump();
  binary::Writer w;
  w.bytes("S3TM");
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.bytes(header_text);
  for (Eigen::Index i = 0; i < m.whitener.mean.size(); ++i) w.f64(m.whitener.mean(i));
  detail::write_matrix(w, m.whitener.transform);
  detail::write_matrix(w, m.whitener.inverse_transform);
  detail::write_matrix(w, m.mixing);
  detail::write_matrix(w, m.unmixing);
  detail::write_matrix(w, m.doc_topic);
  detail::write_matrix(w, m.term_topic);
  w.u32(crc32_of(w.data()));
  return w.data();
}

inline S3Model decode_model(std::string_view bytes, const std::string& context) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "S3TM") fail(context, ": not an s3tm model file");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  binary::Reader trailer(bytes.substr(bytes.size() - 4), context);
  if (crc32_of(body) != trailer.u32()) fail(context, ": checksum mismatch (file is corrupted)");

  binary::Reader r(body, context);
  r.bytes(4);
  const std::uint32_t header_len = r.u32();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.bytes(header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(context, ": malformed model header (", e.what(), ")");
  }
  const auto version = h.value("version", 0u);
  if (version != kModelFormatVersion)
    fail(context, ": unsupported model format version ", version, " (this build reads version ",
         kModelFormatVersion, ")");

  S3Model m;
  try {
    m.n_topics = h.at("n_topics").get<std::size_t>();
    m.seed = RngSeed(h.at("seed").get<std::uint64_t>());
    m.fit_runtime = h.at("fit_runtime").get<double>();
    m.center_terms = h.at("center_terms").get<bool>();
    m.orient_by_skew = h.at("orient_by_skew").get<bool>();
    m.n_iter = h.at("n_iter").get<int>();
    m.converged = h.at("converged").get<bool>();
    m.warnings = h.at("warnings").get<std::vector<std::string>>();
    const auto& v = h.at("vocabulary");
    m.vocab.n_docs = v.at("n_docs").get<std::size_t>();
    m.vocab.terms = v.at("terms").get<std::vector<std::string>>();
    m.vocab.doc_freq = v.at("doc_freq").get<std::vector<std::uint32_t>>();
    m.vocab.total_count = v.at("total_count").get<std::vector<std::uint64_t>>();
    m.vocab.reindex();
  } catch (const nlohmann::json::exception& e) {
    fail(context, ": incomplete model header (", e.what(), ")");
  }
  if (detail::hex64(vocabulary_hash(m.vocab)) != h.value("vocab_hash", ""))
    fail(context, ": vocabulary hash mismatch");

  const auto k = static_cast<Eigen::Index>(m.n_topics);
  const auto d = h.at("dims").get<Eigen::Index>();
  const auto n = h.at("n_docs").get<Eigen::Index>();
  const auto v = h.at("n_terms").get<Eigen::Index>();
  if (static_cast<std::size_t>(v) != m.vocab.size()) fail(context, ": n_terms does not match vocabulary");
  const auto expected = static_cast<std::size_t>(d + 2 * k * d + 2 * d * k + n * k + v * k) * 8;
  if (r.remaining() != expected)
    fail(context, ": payload holds ", r.remaining(), " bytes, header implies ", expected);
  m.whitener.mean = detail::read_matrix(r, d, 1);
  m.whitener.transform = detail::read_matrix(r, k, d);
  m.whitener.inverse_transform = detail::read_matrix(r, d, k);
  m.mixing = detail::read_matrix(r, d, k);
  m.unmixing = detail::read_matrix(r, k, d);
  m.doc_topic = detail::read_matrix(r, n, k);
  m.term_topic = detail::read_matrix(r, v, k);
  return m;
}

inline void save_model(const S3Model& model, const std::filesystem::path& path) {
  binary::write_file_atomic(path, encode_model(model));
}

inline S3Model load_model(const std::filesystem::path& path) {
  return decode_model(binary::read_file(path), path.string());
}

}  // namespace s3tm
