// s3tm command-line front end.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s3tm/s3tm.hpp"

namespace {

using namespace s3tm;

struct Common {
  std::uint64_t seed = 42;
  std::size_t min_df = 10;
  double max_df = 1.0;
  std::size_t top_k = 10;
  std::vector<std::size_t> topics;
  std::string format;
};

struct Sources {
  std::string corpus;
  std::string corpus_format = "jsonl";
  std::string doc_embeddings;
  std::string term_embeddings;
  std::string word_vectors;
};

void add_sources(CLI::App* cmd, Sources& s, bool corpus_required) {
  auto* c = cmd->add_option("--corpus", s.corpus, "Corpus (JSONL file or directory of .txt files)");
  if (corpus_required) c->required();
  cmd->add_option("--corpus-format", s.corpus_format, "jsonl or dir")->check(CLI::IsMember({"jsonl", "dir"}));
  cmd->add_option("--doc-embeddings", s.doc_embeddings, "Document embeddings (EMB1 or CSV), one row per document");
  cmd->add_option("--term-embeddings", s.term_embeddings, "Labelled term embeddings (EMB1)");
  cmd->add_option("--word-vectors", s.word_vectors, "Word-vector text file for the averaged static encoder");
}

RunSpec spec_from(const Sources& s, const Common& c) {
  RunSpec spec;
  spec.corpus = s.corpus;
  spec.corpus_format = parse_corpus_format(s.corpus_format);
  spec.doc_embeddings = s.doc_embeddings;
  spec.term_embeddings = s.term_embeddings;
  spec.word_vectors = s.word_vectors;
  spec.min_df = c.min_df;
  spec.max_df_ratio = c.max_df;
  spec.seed = c.seed;
  spec.top_k = c.top_k;
  return spec;
}

void write_or_print(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") std::cout << text;
  else binary::write_file_atomic(output, text);
}

std::string describe_text(const std::vector<TopicDescription>& topics, const std::string& format) {
  std::string out;
  if (format == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : topics) {
      nlohmann::ordered_json j;
      j["topic"] = t.topic_id;
      for (const auto* pole : {"positive", "negative"}) {
        const auto& list = std::string(pole) == "positive" ? t.positive : t.negative;
        j[pole] = nlohmann::ordered_json::array();
        for (const auto& st : list) j[pole].push_back({{"term", st.term}, {"score", st.score}});
      }
      arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
  }
  if (format == "csv") {
    out = "topic,pole,rank,term,score\n";
    for (const auto& t : topics) {
      for (std::size_t i = 0; i < t.positive.size(); ++i)
        out += std::to_string(t.topic_id) + ",positive," + std::to_string(i + 1) + "," +
               detail::csv_escape(t.positive[i].term) + "," + format_shortest(t.positive[i].score) + "\n";
      for (std::size_t i = 0; i < t.negative.size(); ++i)
        out += std::to_string(t.topic_id) + ",negative," + std::to_string(i + 1) + "," +
               detail::csv_escape(t.negative[i].term) + "," + format_shortest(t.negative[i].score) + "\n";
    }
    return out;
  }
  for (const auto& t : topics) {
    out += "topic " + std::to_string(t.topic_id) + "\n  positive:";
    for (const auto& st : t.positive) out += " " + st.term;
    out += "\n  negative:";
    for (const auto& st : t.negative) out += " " + st.term;
    out += "\n";
  }
  return out;
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += (c ? "," : "") + format_shortest(m(r, c));
    out += "\n";
  }
  return out;
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"s3tm: topic models from document embeddings by independent component analysis"};
  app.name("s3tm");
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "", "Config file with key=value lines; flags on the command line take precedence");
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
  app.add_option("--min-df", common.min_df, "Minimum document frequency for vocabulary terms")->capture_default_str();
  app.add_option("--max-df", common.max_df, "Maximum document-frequency ratio")->capture_default_str();
  app.add_option("--top-k", common.top_k, "Terms per topic")->capture_default_str();
  app.add_option("--topics", common.topics, "Topic count(s)")->delimiter(',');
  app.add_option("--format", common.format, "Output format (command specific)");

  // fit
  Sources fit_src;
  std::string fit_out, nonlinearity = "logcosh";
  IcaOptions ica;
  bool uncentered = false, no_orient = false;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an S3 model and save it");
  add_sources(fit_cmd, fit_src, true);
  fit_cmd->add_option("-o,--output", fit_out, "Model file to write")->required();
  fit_cmd->add_option("--nonlinearity", nonlinearity, "logcosh, exp or cube")
      ->check(CLI::IsMember({"logcosh", "exp", "cube"}));
  fit_cmd->add_option("--max-iter", ica.max_iter, "FastICA iteration cap")->capture_default_str();
  fit_cmd->add_option("--tol", ica.tol, "FastICA convergence tolerance")->capture_default_str();
  fit_cmd->add_flag("--uncentered-terms", uncentered, "Score terms without subtracting the document mean");
  fit_cmd->add_flag("--no-orient", no_orient, "Keep the arbitrary ICA sign of each topic");

  // describe
  std::string model_path, describe_out;
  auto* describe_cmd = app.add_subcommand("describe", "List positive and negative top terms per topic");
  describe_cmd->add_option("-m,--model", model_path, "Model file")->required();
  describe_cmd->add_option("-o,--output", describe_out, "Write here instead of stdout");

  // transform
  Sources tr_src;
  std::string tr_model, tr_embeddings, tr_out;
  auto* transform_cmd = app.add_subcommand("transform", "Topic importances for new documents (signed)");
  transform_cmd->add_option("-m,--model", tr_model, "Model file")->required();
  transform_cmd->add_option("--embeddings", tr_embeddings, "Embeddings of the new documents (EMB1 or CSV)");
  transform_cmd->add_option("--corpus", tr_src.corpus, "Corpus to encode with --word-vectors");
  transform_cmd->add_option("--corpus-format", tr_src.corpus_format, "jsonl or dir")
      ->check(CLI::IsMember({"jsonl", "dir"}));
  transform_cmd->add_option("--word-vectors", tr_src.word_vectors, "Word-vector text file");
  transform_cmd->add_option("-o,--output", tr_out, "EMB1/CSV file to write; CSV on stdout if omitted");

  // compass
  std::string cp_model, cp_out;
  std::size_t axis_x = 0, axis_y = 1, labels = 20;
  std::vector<std::string> cp_terms;
  auto* compass_cmd = app.add_subcommand("compass", "Term positions along two topic axes (CSV or SVG)");
  compass_cmd->add_option("-m,--model", cp_model, "Model file")->required();
  compass_cmd->add_option("-x,--x-axis", axis_x, "Topic on the horizontal axis")->capture_default_str();
  compass_cmd->add_option("-y,--y-axis", axis_y, "Topic on the vertical axis")->capture_default_str();
  compass_cmd->add_option("--labels", labels, "Number of labelled terms in SVG output")->capture_default_str();
  compass_cmd->add_option("--terms", cp_terms, "Restrict CSV output to these terms")->delimiter(',');
  compass_cmd->add_option("-o,--output", cp_out, "Write here instead of stdout");

  // eval
  std::string ev_topics, ev_corpus, ev_corpus_format = "jsonl", ev_in, ev_ex, ev_stop, ev_name = "external";
  std::size_t ev_window = 10;
  auto* eval_cmd = app.add_subcommand("eval", "Score a topics file ('t: term term ...' per line)");
  eval_cmd->add_option("--topic-file", ev_topics, "Topics file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", ev_corpus, "Reference corpus for NPMI");
  eval_cmd->add_option("--corpus-format", ev_corpus_format, "jsonl or dir")->check(CLI::IsMember({"jsonl", "dir"}));
  eval_cmd->add_option("--internal-vectors", ev_in, "Word vectors trained on the corpus (WEC_in)");
  eval_cmd->add_option("--external-vectors", ev_ex, "External word vectors (WEC_ex)");
  eval_cmd->add_option("--stopwords", ev_stop, "Stop-word list (one per line, # comments)");
  eval_cmd->add_option("--window", ev_window, "NPMI sliding-window size")->capture_default_str();
  eval_cmd->add_option("--name", ev_name, "Model name for the report")->capture_default_str();

  // bench
  Sources b_src;
  std::string b_out, b_ext, b_stop, b_weighting = "tfidf";
  std::vector<std::string> b_models = {"s3", "nmf", "lsa"};
  std::size_t b_window = 10, b_labels = 20;
  SgnsConfig b_sgns;
  auto* bench_cmd = app.add_subcommand("bench", "Run the model x topic-count matrix and write a record directory");
  add_sources(bench_cmd, b_src, true);
  bench_cmd->add_option("-o,--output", b_out, "Record directory")->required();
  bench_cmd->add_option("--models", b_models, "Models to run (s3, nmf, lsa)")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--external-vectors", b_ext, "External word vectors for WEC_ex");
  bench_cmd->add_option("--stopwords", b_stop, "Stop-word list replacing the bundled English list");
  bench_cmd->add_option("--weighting", b_weighting, "Baseline term weighting: tfidf or count")
      ->check(CLI::IsMember({"tfidf", "count"}));
  bench_cmd->add_option("--npmi-window", b_window, "NPMI sliding-window size")->capture_default_str();
  bench_cmd->add_option("--compass-labels", b_labels, "Labelled terms per compass plot")->capture_default_str();
  bench_cmd->add_option("--wordvec-dims", b_sgns.dims, "Dimensions of the internal word vectors")->capture_default_str();
  bench_cmd->add_option("--wordvec-epochs", b_sgns.epochs, "Epochs for the internal word vectors")->capture_default_str();
  bench_cmd->add_option("--wordvec-min-count", b_sgns.min_count, "min_count for the internal word vectors")
      ->capture_default_str();

  // train-wordvec
  std::string wv_corpus, wv_format = "jsonl", wv_out;
  SgnsConfig wv;
  auto* wv_cmd = app.add_subcommand("train-wordvec", "Train skip-gram word vectors on a corpus");
  wv_cmd->add_option("--corpus", wv_corpus, "Corpus")->required();
  wv_cmd->add_option("--corpus-format", wv_format, "jsonl or dir")->check(CLI::IsMember({"jsonl", "dir"}));
  wv_cmd->add_option("-o,--output", wv_out, "Word-vector text file to write")->required();
  wv_cmd->add_option("--dims", wv.dims)->capture_default_str();
  wv_cmd->add_option("--window", wv.window)->capture_default_str();
  wv_cmd->add_option("--negatives", wv.negatives)->capture_default_str();
  wv_cmd->add_option("--epochs", wv.epochs)->capture_default_str();
  wv_cmd->add_option("--min-count", wv.min_count)->capture_default_str();
  wv_cmd->add_option("--lr", wv.initial_lr, "Initial learning rate")->capture_default_str();
  wv_cmd->add_option("--subsample", wv.subsample_threshold)->capture_default_str();
  wv_cmd->add_option("--threads", wv.threads, "Training threads; 1 is deterministic")->capture_default_str();

  // encode-static
  Sources es_src;
  std::string es_out, es_terms_out;
  auto* es_cmd = app.add_subcommand("encode-static", "Average word vectors into document (and term) embeddings");
  es_cmd->add_option("--corpus", es_src.corpus, "Corpus")->required();
  es_cmd->add_option("--corpus-format", es_src.corpus_format, "jsonl or dir")->check(CLI::IsMember({"jsonl", "dir"}));
  es_cmd->add_option("--word-vectors", es_src.word_vectors, "Word-vector text file")->required();
  es_cmd->add_option("-o,--output", es_out, "Document embeddings to write (EMB1 or .csv)")->required();
  es_cmd->add_option("--terms-output", es_terms_out, "Also write labelled vocabulary embeddings (EMB1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*fit_cmd) {
      if (common.topics.size() != 1) fail("fit needs exactly one --topics value");
      RunSpec spec = spec_from(fit_src, common);
      spec.output_dir = ".";
      std::vector<std::string> warnings;
      validate(spec);
      const auto pc = detail::prepare(spec, warnings);
      S3Options opts;
      opts.ica = ica;
      opts.ica.nonlinearity = parse_nonlinearity(nonlinearity);
      opts.center_terms = !uncentered;
      opts.orient_by_skew = !no_orient;
      const S3Model model = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, common.topics.front(),
                                RngSeed(common.seed), opts);
      save_model(model, fit_out);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << "fitted " << model.n_topics << " topics on " << model.doc_topic.rows() << " documents, "
                << model.vocab.size() << " terms in " << format_fixed(model.fit_runtime, 3) << " s -> " << fit_out
                << "\n";
    } else if (*describe_cmd) {
      const std::string format = common.format.empty() ? "text" : common.format;
      if (format != "text" && format != "json" && format != "csv") fail("describe --format must be text, json or csv");
      write_or_print(describe_text(describe_topics(load_model(model_path), common.top_k), format), describe_out);
    } else if (*transform_cmd) {
      const S3Model model = load_model(tr_model);
      EmbeddingMatrix x;
      if (!tr_embeddings.empty()) {
        x = load_embeddings(tr_embeddings);
      } else if (!tr_src.corpus.empty() && !tr_src.word_vectors.empty()) {
        const auto docs = load_corpus(tr_src.corpus, parse_corpus_format(tr_src.corpus_format));
        x = encode_documents_static(docs, load_word_vectors(tr_src.word_vectors));
      } else {
        fail("transform needs --embeddings, or --corpus with --word-vectors");
      }
      const Matrix s = transform(model, x);
      if (tr_out.empty()) std::cout << matrix_csv(s);
      else save_embeddings(EmbeddingMatrix::from_matrix(s), tr_out);
    } else if (*compass_cmd) {
      const std::string format = common.format.empty() ? "csv" : common.format;
      const S3Model model = load_model(cp_model);
      if (format == "svg") {
        write_or_print(render_compass_svg(model, axis_x, axis_y, labels), cp_out);
      } else if (format == "csv") {
        std::optional<std::vector<std::string>> only;
        if (!cp_terms.empty()) only = cp_terms;
        write_or_print(render_compass_csv(compass(model, axis_x, axis_y, only)), cp_out);
      } else {
        fail("compass --format must be csv or svg");
      }
    } else if (*eval_cmd) {
      const std::string format = common.format.empty() ? "csv" : common.format;
      const TopicTerms topics = parse_topics_file(binary::read_file(ev_topics));
      if (topics.empty()) fail("topics file is empty: ", ev_topics);
      MetricReport r;
      r.model_name = ev_name;
      r.encoder_tag = "n/a";
      r.n_topics = topics.size();
      r.seed = common.seed;
      r.diversity = diversity(topics);
      if (!ev_in.empty()) r.wec_in = wec(topics, load_word_vectors(ev_in));
      if (!ev_ex.empty()) r.wec_ex = wec(topics, load_word_vectors(ev_ex));
      if (!ev_corpus.empty()) {
        std::vector<std::string> absent;
        r.npmi = npmi(topics, tokenize_all(load_corpus(ev_corpus, parse_corpus_format(ev_corpus_format))), ev_window,
                      &absent);
        if (!absent.empty())
          std::cerr << "warning: " << absent.size() << " topic terms never occur in the reference corpus\n";
      }
      r.stopword_rate = stopword_rate(topics, ev_stop.empty() ? StopwordList::english() : StopwordList::load(ev_stop));
      r.nonalpha_rate = nonalpha_rate(topics);
      if (format == "json") std::cout << to_json(r).dump(2) << "\n";
      else if (format == "csv") std::cout << metric_csv_header() << to_csv_row(r);
      else if (format == "markdown") std::cout << render_table({r}, TableFormat::markdown);
      else fail("eval --format must be csv, json or markdown");
    } else if (*bench_cmd) {
      const std::string format = common.format.empty() ? "markdown" : common.format;
      if (format != "markdown" && format != "csv") fail("bench --format must be markdown or csv");
      RunSpec spec = spec_from(b_src, common);
      if (!common.topics.empty()) spec.topic_counts = common.topics;
      spec.models = b_models;
      spec.output_dir = b_out;
      spec.external_word_vectors = b_ext;
      spec.stopwords = b_stop;
      spec.baseline_weighting = b_weighting == "count" ? Weighting::count : Weighting::tfidf;
      spec.npmi_window = b_window;
      spec.compass_labels = b_labels;
      spec.internal_vectors = b_sgns;
      const RunRecord rec = run_benchmark(spec);
      for (const auto& w : rec.warnings) std::cerr << "warning: " << one_line(w) << "\n";
      for (const auto& f : rec.failures)
        std::cerr << "failed: " << f.model << " k=" << f.n_topics << ": " << one_line(f.error) << "\n";
      if (!rec.reports.empty())
        std::cout << render_table(rec.reports, format == "csv" ? TableFormat::csv : TableFormat::markdown);
      if (rec.reports.empty()) fail("every benchmark cell failed; see ", (spec.output_dir / "failures.csv").string());
    } else if (*wv_cmd) {
      wv.seed = RngSeed(common.seed);
      const auto corpus = tokenize_all(load_corpus(wv_corpus, parse_corpus_format(wv_format)));
      const SgnsResult res = train_sgns(corpus, wv);
      save_word_vectors(res.table, wv_out);
      std::cerr << "trained " << res.table.size() << " vectors; epoch loss:";
      for (double l : res.epoch_loss) std::cerr << " " << format_fixed(l, 4);
      std::cerr << "\n";
    } else if (*es_cmd) {
      const auto docs = load_corpus(es_src.corpus, parse_corpus_format(es_src.corpus_format));
      const WordVectorTable table = load_word_vectors(es_src.word_vectors);
      const auto tokens = tokenize_all(docs);
      save_embeddings(encode_documents_static(tokens, table), es_out);
      if (!es_terms_out.empty()) {
        VocabularyEncoding enc = encode_vocabulary(build_vocabulary(tokens, common.min_df, common.max_df), table);
        if (!enc.missing.empty()) std::cerr << "warning: " << enc.missing.size() << " terms have no vector\n";
        save_embeddings(enc.matrix, es_terms_out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "s3tm: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

int main(int argc, char** argv) { return cli_main(argc, argv); }
