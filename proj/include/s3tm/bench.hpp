#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3tm/baselines.hpp"
#include "s3tm/binary_io.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/embed.hpp"
#include "s3tm/metrics.hpp"
#include "s3tm/s3.hpp"
#include "s3tm/topics.hpp"
#include "s3tm/wordvec.hpp"

namespace s3tm {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct RunSpec {
  std::filesystem::path corpus;
  CorpusFormat corpus_format = CorpusFormat::jsonl;

  // Either precomputed embeddings (documents + labelled terms) ...
  std::filesystem::path doc_embeddings;
  std::filesystem::path term_embeddings;
  // ... or the averaged static word-vector encoder.
  std::filesystem::path word_vectors;

  std::vector<std::string> models = {"s3", "nmf", "lsa"};
  std::vector<std::size_t> topic_counts = {10, 20, 30, 40, 50};
  std::size_t top_k = 10;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir;

  std::size_t min_df = 10;
  double max_df_ratio = 1.0;
  Weighting baseline_weighting = Weighting::tfidf;
  std::size_t npmi_window = 10;
  std::filesystem::path external_word_vectors;  // optional, enables WEC_ex
  std::filesystem::path stopwords;              // optional, default bundled list
  SgnsConfig internal_vectors;                  // seed is overridden by `seed`
  S3Options s3;
  std::size_t compass_labels = 20;

  bool uses_static_encoder() const { return !word_vectors.empty(); }

  std::string encoder_tag() const {
    return uses_static_encoder() ? "static-avg:" + word_vectors.stem().string()
                                 : "file:" + doc_embeddings.stem().string();
  }
};

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> models = {"s3", "nmf", "lsa", "lda"};
  return models;
}

// Checks a RunSpec before any work is done.
inline void validate(const RunSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.corpus.empty() || !fs::exists(spec.corpus)) fail("corpus not found: '", spec.corpus.string(), "'");
  if (spec.uses_static_encoder()) {
    if (!fs::exists(spec.word_vectors)) fail("word-vector file not found: ", spec.word_vectors.string());
  } else {
    if (spec.doc_embeddings.empty() || spec.term_embeddings.empty())
      fail("need either word vectors (static encoder) or both document and term embedding files");
    if (!fs::exists(spec.doc_embeddings)) fail("document embeddings not found: ", spec.doc_embeddings.string());
    if (!fs::exists(spec.term_embeddings)) fail("term embeddings not found: ", spec.term_embeddings.string());
  }
  if (!spec.external_word_vectors.empty() && !fs::exists(spec.external_word_vectors))
    fail("external word vectors not found: ", spec.external_word_vectors.string());
  if (!spec.stopwords.empty() && !fs::exists(spec.stopwords))
    fail("stop-word list not found: ", spec.stopwords.string());
  if (spec.models.empty()) fail("no models requested");
  for (const auto& m : spec.models)
    if (std::find(known_models().begin(), known_models().end(), m) == known_models().end())
      fail("unknown model '", m, "' (expected s3, nmf, lsa or lda)");
  if (spec.topic_counts.empty()) fail("no topic counts requested");
  for (auto k : spec.topic_counts)
    if (k < 1) fail("topic counts must be >= 1");
  if (spec.top_k < 1) fail("top_k must be >= 1");
  if (spec.output_dir.empty()) fail("no output directory given");
}

inline nlohmann::ordered_json to_json(const RunSpec& spec) {
  nlohmann::ordered_json j;
  j["corpus"] = spec.corpus.string();
  j["corpus_format"] = spec.corpus_format == CorpusFormat::jsonl ? "jsonl" : "plaintext-dir";
  j["encoder_tag"] = spec.encoder_tag();
  j["doc_embeddings"] = spec.doc_embeddings.string();
  j["term_embeddings"] = spec.term_embeddings.string();
  j["word_vectors"] = spec.word_vectors.string();
  j["models"] = spec.models;
  j["topic_counts"] = spec.topic_counts;
  j["top_k"] = spec.top_k;
  j["seed"] = spec.seed;
  j["min_df"] = spec.min_df;
  j["max_df_ratio"] = spec.max_df_ratio;
  j["baseline_weighting"] = spec.baseline_weighting == Weighting::tfidf ? "tfidf" : "count";
  j["npmi_window"] = spec.npmi_window;
  j["external_word_vectors"] = spec.external_word_vectors.string();
  j["stopwords"] = spec.stopwords.string();
  j["internal_vectors"] = {{"dims", spec.internal_vectors.dims},
                           {"window", spec.internal_vectors.window},
                           {"negatives", spec.internal_vectors.negatives},
                           {"epochs", spec.internal_vectors.epochs},
                           {"min_count", spec.internal_vectors.min_count}};
  j["center_terms"] = spec.s3.center_terms;
  j["orient_by_skew"] = spec.s3.orient_by_skew;
  j["ica"] = {{"max_iter", spec.s3.ica.max_iter}, {"tol", spec.s3.ica.tol}};
  return j;
}

struct CellFailure {
  std::string model;
  std::size_t n_topics = 0;
  std::string error;
};

struct RunRecord {
  RunSpec spec;
  std::vector<MetricReport> reports;
  std::map<std::pair<std::string, std::size_t>, std::vector<TopicDescription>> topics;
  std::vector<CellFailure> failures;
  std::vector<std::string> warnings;
  std::string tool_version{kToolVersion};
  std::string started_at;
  std::string finished_at;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  binary::write_file_atomic(path, text);
}

}  // namespace detail

// "t: term1 term2 ..." per line, positive terms.
inline std::string format_topics_file(const std::vector<TopicDescription>& topics) {
  std::string out;
  for (const auto& t : topics) {
    out += std::to_string(t.topic_id) + ":";
    for (const auto& st : t.positive) out += " " + st.term;
    out += "\n";
  }
  return out;
}

inline TopicTerms parse_topics_file(std::string_view text) {
  TopicTerms topics;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail("topics file line ", line_no, ": expected 't: term ...'");
    std::vector<std::string> terms;
    std::string_view rest = line.substr(colon + 1);
    std::size_t i = 0;
    while (i < rest.size()) {
      while (i < rest.size() && rest[i] == ' ') ++i;
      std::size_t j = i;
      while (j < rest.size() && rest[j] != ' ') ++j;
      if (j > i) terms.emplace_back(rest.substr(i, j - i));
      i = j;
    }
    topics.push_back(std::move(terms));
  }
  return topics;
}

// Scatter of every vocabulary term along two topic axes. The max_labels terms
// farthest from the origin are labelled; axis captions list each topic's
// top-3 positive terms.
inline std::string render_compass_svg(const S3Model& model, std::size_t axis_x, std::size_t axis_y,
                                      std::size_t max_labels) {
  const Compass c = compass(model, axis_x, axis_y);
  constexpr double size = 800.0, margin = 70.0;
  double extent = 0.0;
  for (const auto& p : c.points) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  if (extent == 0.0) extent = 1.0;
  const double half = (size - 2.0 * margin) / 2.0;
  auto px = [&](double x) { return format_fixed(size / 2.0 + x / extent * half, 2); };
  auto py = [&](double y) { return format_fixed(size / 2.0 - y / extent * half, 2); };
  auto escape = [](std::string_view s) {
    std::string out;
    for (char ch : s) {
      switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(ch);
      }
    }
    return out;
  };
  auto caption = [&](std::size_t axis) {
    const auto desc = rank_terms(model.term_topic.col(static_cast<Eigen::Index>(axis)), model.vocab.terms,
                                 std::min<std::size_t>(3, model.vocab.size()), false);
    std::string out = "Topic " + std::to_string(axis) + ":";
    for (const auto& st : desc.front().positive) out += " " + st.term;
    return escape(out);
  };

  std::vector<std::size_t> order(c.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto norm2 = [&](std::size_t i) { return c.points[i].x * c.points[i].x + c.points[i].y * c.points[i].y; };
  const std::size_t n_labels = std::min(max_labels, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_labels), order.end(),
                    [&](std::size_t a, std::size_t b) { return norm2(a) != norm2(b) ? norm2(a) > norm2(b) : a < b; });

  const std::string sz = format_fixed(size, 0);
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + sz + "\" height=\"" + sz + "\" viewBox=\"0 0 " + sz +
         " " + sz + "\" font-family=\"sans-serif\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + sz + "\" height=\"" + sz + "\" fill=\"white\"/>\n";
  svg += "<line class=\"axis\" x1=\"" + format_fixed(margin, 2) + "\" y1=\"" + py(0.0) + "\" x2=\"" +
         format_fixed(size - margin, 2) + "\" y2=\"" + py(0.0) + "\" stroke=\"#444\"/>\n";
  svg += "<line class=\"axis\" x1=\"" + px(0.0) + "\" y1=\"" + format_fixed(margin, 2) + "\" x2=\"" + px(0.0) +
         "\" y2=\"" + format_fixed(size - margin, 2) + "\" stroke=\"#444\"/>\n";
  svg += "<text class=\"axis-label\" x=\"" + format_fixed(size / 2.0, 2) + "\" y=\"" + format_fixed(size - 20.0, 2) +
         "\" text-anchor=\"middle\" font-size=\"14\">" + caption(axis_x) + "</text>\n";
  svg += "<text class=\"axis-label\" x=\"20\" y=\"" + format_fixed(size / 2.0, 2) +
         "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 " + format_fixed(size / 2.0, 2) +
         ")\">" + caption(axis_y) + "</text>\n";
  svg += "<g class=\"points\" fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  for (const auto& p : c.points)
    svg += "<circle cx=\"" + px(p.x) + "\" cy=\"" + py(p.y) + "\" r=\"2\"/>\n";
  svg += "</g>\n<g class=\"labels\" font-size=\"11\" fill=\"#111\">\n";
  for (std::size_t i = 0; i < n_labels; ++i) {
    const auto& p = c.points[order[i]];
    svg += "<text class=\"term\" x=\"" + px(p.x) + "\" y=\"" + py(p.y) + "\" dx=\"3\" dy=\"-3\">" + escape(p.term) +
           "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

inline std::string render_compass_csv(const Compass& c) {
  std::string out = "term,x,y\n";
  for (const auto& p : c.points)
    out += detail::csv_escape(p.term) + "," + format_shortest(p.x) + "," + format_shortest(p.y) + "\n";
  return out;
}

enum class TableFormat { csv, markdown };

struct Aggregate {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double two_sd = std::numeric_limits<double>::quiet_NaN();  // 2 x population SD
};

inline Aggregate aggregate(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values)
    if (!std::isnan(x)) v.push_back(x);
  Aggregate a;
  if (v.empty()) return a;
  double sum = 0.0;
  for (double x : v) sum += x;
  a.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.two_sd = 2.0 * std::sqrt(ss / static_cast<double>(v.size()));
  return a;
}

// One row per (model, n_topics) followed by a per-model "mean ± 2 SD" row.
// CSV keeps full precision; markdown rounds to two decimals.
inline std::string render_table(const std::vector<MetricReport>& reports, TableFormat format) {
  if (reports.empty()) fail("cannot render an empty record");
  std::vector<std::string> models;
  for (const auto& r : reports)
    if (std::find(models.begin(), models.end(), r.model_name) == models.end()) models.push_back(r.model_name);

  const bool md = format == TableFormat::markdown;
  auto cell = [&](double v) {
    if (std::isnan(v)) return std::string(md ? "n/a" : "");
    return md ? format_fixed(v, 2) : format_shortest(v);
  };
  auto agg_cell = [&](const Aggregate& a) {
    if (std::isnan(a.mean)) return std::string(md ? "n/a" : "");
    return md ? format_fixed(a.mean, 2) + " ± " + format_fixed(a.two_sd, 2)
              : format_shortest(a.mean) + " ± " + format_shortest(a.two_sd);
  };
  auto row = [&](const std::vector<std::string>& cells) {
    std::string out = md ? "|" : "";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (md) out += " " + cells[i] + " |";
      else out += (i ? "," : "") + detail::csv_escape(cells[i]);
    }
    return out + "\n";
  };

  std::vector<std::string> header = {"model", "n_topics"};
  for (const auto& [name, _] : reports.front().metrics()) header.emplace_back(name);
  std::string out = row(header);
  if (md) {
    std::vector<std::string> rule(header.size(), "---");
    out += row(rule);
  }
  for (const auto& model : models) {
    std::vector<std::vector<double>> columns(header.size() - 2);
    for (const auto& r : reports) {
      if (r.model_name != model) continue;
      std::vector<std::string> cells = {r.model_name, std::to_string(r.n_topics)};
      const auto metrics = r.metrics();
      for (std::size_t i = 0; i < metrics.size(); ++i) {
        cells.push_back(cell(metrics[i].second));
        columns[i].push_back(metrics[i].second);
      }
      out += row(cells);
    }
    std::vector<std::string> cells = {model, "all"};
    for (const auto& col : columns) cells.push_back(agg_cell(aggregate(col)));
    out += row(cells);
  }
  return out;
}

inline std::vector<MetricReport> parse_reports_csv(std::string_view text) {
  std::vector<MetricReport> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') { cur.push_back('"'); ++i; }
        else if (ch == '"') quoted = false;
        else cur.push_back(ch);
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        f.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    f.push_back(std::move(cur));
    if (f.size() != MetricReport::kFields.size()) fail("reports.csv: expected ", MetricReport::kFields.size(), " fields");
    auto num = [](const std::string& s) {
      return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    MetricReport r;
    r.model_name = f[0];
    r.encoder_tag = f[1];
    r.n_topics = std::stoul(f[2]);
    r.diversity = num(f[3]);
    r.wec_in = num(f[4]);
    r.wec_ex = num(f[5]);
    r.npmi = num(f[6]);
    r.stopword_rate = num(f[7]);
    r.nonalpha_rate = num(f[8]);
    r.runtime_seconds = num(f[9]);
    r.seed = std::stoull(f[10]);
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

struct PreparedCorpus {
  std::vector<Document> docs;
  std::vector<TokenList> tokens;
  Vocabulary vocab;
  EmbeddingMatrix doc_embeddings;
  EmbeddingMatrix term_embeddings;
};

inline PreparedCorpus prepare(const RunSpec& spec, std::vector<std::string>& warnings) {
  PreparedCorpus pc;
  pc.docs = load_corpus(spec.corpus, spec.corpus_format);
  if (pc.docs.empty()) fail("corpus is empty: ", spec.corpus.string());
  pc.tokens = tokenize_all(pc.docs);
  pc.vocab = build_vocabulary(pc.tokens, spec.min_df, spec.max_df_ratio);
  if (spec.uses_static_encoder()) {
    const WordVectorTable table = load_word_vectors(spec.word_vectors);
    pc.doc_embeddings = encode_documents_static(pc.docs, table);
    VocabularyEncoding enc = encode_vocabulary(pc.vocab, table);
    if (!enc.missing.empty())
      warnings.push_back(detail::concat(enc.missing.size(), " vocabulary terms have no static vector (zero rows)"));
    pc.term_embeddings = std::move(enc.matrix);
  } else {
    pc.doc_embeddings = load_embeddings(spec.doc_embeddings);
    if (pc.doc_embeddings.rows != pc.docs.size())
      fail("document embeddings have ", pc.doc_embeddings.rows, " rows but the corpus has ", pc.docs.size(),
           " documents");
    pc.term_embeddings = encode_vocabulary(pc.vocab, load_embeddings(spec.term_embeddings));
  }
  return pc;
}

}  // namespace detail

// Runs every (model, n_topics) cell and writes the record directory:
// spec.json, reports.csv, failures.csv, table.md, record.json,
// topics/<model>_<k>.txt and compass/s3_<k>.svg.
inline RunRecord run_benchmark(const RunSpec& spec) {
  validate(spec);
  RunRecord rec;
  rec.spec = spec;
  rec.started_at = detail::utc_timestamp();

  const detail::PreparedCorpus pc = detail::prepare(spec, rec.warnings);
  const StopwordList stop = spec.stopwords.empty() ? StopwordList::english() : StopwordList::load(spec.stopwords);

  std::optional<WordVectorTable> internal;
  try {
    SgnsConfig cfg = spec.internal_vectors;
    cfg.seed = RngSeed(spec.seed);
    internal = train_sgns(pc.tokens, cfg).table;
  } catch (const Error& e) {
    rec.warnings.push_back(std::string("WEC_in unavailable: ") + e.what());
  }
  std::optional<WordVectorTable> external;
  if (!spec.external_word_vectors.empty()) external = load_word_vectors(spec.external_word_vectors);

  const bool needs_bow = std::any_of(spec.models.begin(), spec.models.end(),
                                     [](const std::string& m) { return m == "nmf" || m == "lsa"; });
  BowMatrix bow;
  if (needs_bow) bow = bow_counts(pc.tokens, pc.vocab, spec.baseline_weighting);

  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir / "topics");
  fs::create_directories(spec.output_dir / "compass");

  for (const auto& model_name : spec.models) {
    for (std::size_t k : spec.topic_counts) {
      try {
        if (model_name == "lda") fail("not implemented");
        std::vector<TopicDescription> topics;
        double runtime = 0.0;
        std::optional<S3Model> s3_model;
        const auto start = std::chrono::steady_clock::now();
        if (model_name == "s3") {
          s3_model = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, k, RngSeed(spec.seed), spec.s3);
          runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          for (const auto& w : s3_model->warnings) rec.warnings.push_back(detail::concat("s3 k=", k, ": ", w));
          topics = describe_topics(*s3_model, spec.top_k);
        } else if (model_name == "nmf") {
          const NmfModel nmf = fit_nmf(bow, k, RngSeed(spec.seed));
          runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          if (!nmf.converged) rec.warnings.push_back(detail::concat("nmf k=", k, ": reached max_iter"));
          topics = describe_topics_baseline(nmf, pc.vocab, spec.top_k);
        } else {
          const LsaModel lsa = fit_lsa(bow, k);
          runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          if (lsa.rank_deficient)
            rec.warnings.push_back(detail::concat("lsa k=", k, ": only ", lsa.effective_components, " effective components"));
          topics = describe_topics_baseline(lsa, pc.vocab, spec.top_k);
        }

        const TopicTerms lists = positive_term_lists(topics);
        MetricReport r;
        r.model_name = model_name;
        r.encoder_tag = model_name == "s3" ? spec.encoder_tag() : "bow";
        r.n_topics = k;
        r.diversity = diversity(lists);
        if (internal) r.wec_in = wec(lists, *internal);
        if (external) r.wec_ex = wec(lists, *external);
        r.npmi = npmi(lists, pc.tokens, spec.npmi_window);
        r.stopword_rate = stopword_rate(lists, stop);
        r.nonalpha_rate = nonalpha_rate(lists);
        r.runtime_seconds = runtime;
        r.seed = spec.seed;

        detail::write_text(spec.output_dir / "topics" / (model_name + "_" + std::to_string(k) + ".txt"),
                           format_topics_file(topics));
        if (s3_model && k >= 2)
          detail::write_text(spec.output_dir / "compass" / ("s3_" + std::to_string(k) + ".svg"),
                             render_compass_svg(*s3_model, 0, 1, spec.compass_labels));
        rec.reports.push_back(std::move(r));
        rec.topics[{model_name, k}] = std::move(topics);
      } catch (const std::exception& e) {
        rec.failures.push_back({model_name, k, e.what()});
      }
    }
  }
  rec.finished_at = detail::utc_timestamp();

  detail::write_text(spec.output_dir / "spec.json", to_json(spec).dump(2) + "\n");
  std::string csv = metric_csv_header();
  for (const auto& r : rec.reports) csv += to_csv_row(r);
  detail::write_text(spec.output_dir / "reports.csv", csv);
  std::string failures = "model,n_topics,error\n";
  for (const auto& f : rec.failures)
    failures += detail::csv_escape(f.model) + "," + std::to_string(f.n_topics) + "," + detail::csv_escape(f.error) + "\n";
  detail::write_text(spec.output_dir / "failures.csv", failures);
  if (!rec.reports.empty()) detail::write_text(spec.output_dir / "table.md", render_table(rec.reports, TableFormat::markdown));
  nlohmann::ordered_json meta;
  meta["tool_version"] = rec.tool_version;
  meta["started_at"] = rec.started_at;
  meta["finished_at"] = rec.finished_at;
  meta["n_reports"] = rec.reports.size();
  meta["n_failures"] = rec.failures.size();
  meta["warnings"] = rec.warnings;
  detail::write_text(spec.output_dir / "record.json", meta.dump(2) + "\n");
  return rec;
}

}  // namespace s3tm
