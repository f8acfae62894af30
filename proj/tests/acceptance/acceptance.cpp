// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "s3tm/s3tm.hpp"
#include "support/fixture_files.hpp"
#include "support/metric_oracles.hpp"
#include "support/planted.hpp"
#include "support/sgns_corpora.hpp"
#include "support/tempdir.hpp"

using namespace s3tm;
using namespace s3tm::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

// Largest Frobenius distance of a training fit's whitened covariance from I.
double worst_whitening = 0.0;
std::size_t whitening_fits = 0;

void record_whitening(const Matrix& x, const Whitener& w) {
  const Matrix z = w.apply(x);
  const Matrix cov = (z.transpose() * z) / static_cast<double>(x.rows() - 1);
  const double err = (cov - Matrix::Identity(cov.rows(), cov.cols())).norm();
  worst_whitening = std::max(worst_whitening, err);
  ++whitening_fits;
}

Matrix well_conditioned_mixing(Rng& rng, Eigen::Index k) {
  while (true) {
    const Matrix a = rng.normal_matrix(k, k);
    const Vector s = svd(a, false).s;
    if (s(s.size() - 1) > 0 && s(0) / s(s.size() - 1) < 10.0) return a;
  }
}

Outcome ac1_ica_recovery() {
  int good = 0;
  double worst = 0.0, slowest = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng(RngSeed(1000 + static_cast<std::uint64_t>(trial)));
    const Eigen::Index k = 2 + trial % 4;
    const Eigen::Index n = 5000;
    Matrix s(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        s(i, j) = (j + trial) % 2 == 0 ? rng.uniform(-std::sqrt(3.0), std::sqrt(3.0)) : rng.laplace(1.0 / std::sqrt(2.0));
    const Matrix a = well_conditioned_mixing(rng, k);
    const Matrix x = s * a.transpose();
    const auto t0 = Clock::now();
    const IcaResult res = fastica(x, k, RngSeed(static_cast<std::uint64_t>(trial) + 1));
    const double secs = seconds_since(t0);
    record_whitening(x, res.whitener);
    const double amari = amari_index(res.unmixing, a);
    good += amari < 0.05 ? 1 : 0;
    worst = std::max(worst, amari);
    slowest = std::max(slowest, secs);
  }
  return {good >= 38 && slowest < 2.0, std::to_string(good) + "/40 trials with Amari < 0.05 (need 38), worst " +
                                           fmt(worst) + ", slowest " + fmt(slowest, 3) + " s (limit 2 s)"};
}

Outcome ac2_whitening_and_pinv() {
  // Further training fits on varied shapes, both solver paths.
  Rng rng(RngSeed(77));
  const std::vector<std::array<Eigen::Index, 3>> shapes = {
      {3000, 10, 4}, {500, 300, 20}, {60, 100, 30}, {2048, 384, 20}, {100, 50, 50}, {40, 8, 8}};
  for (const auto& [n, d, k] : shapes) {
    const Matrix x = rng.normal_matrix(n, d) * rng.normal_matrix(d, d) + Matrix::Constant(n, d, 3.0);
    record_whitening(x, fit_whitener(x, k));
  }
  const auto pc = make_planted({});
  const S3Model m = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, 5, RngSeed(3));
  record_whitening(pc.doc_embeddings.to_matrix(), m.whitener);

  double worst_penrose = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(40));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(40));
    Matrix a;
    if (i % 3 == 0) {
      const auto r = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(std::min(rows, cols))));
      a = rng.normal_matrix(rows, r) * rng.normal_matrix(r, cols);
    } else {
      a = rng.normal_matrix(rows, cols) * std::pow(10.0, rng.uniform(-3.0, 3.0));
    }
    const Matrix p = pseudo_inverse(a);
    const Matrix ap = a * p, pa = p * a;
    auto rel = [](const Matrix& err, const Matrix& ref) { return err.norm() / std::max(ref.norm(), 1e-300); };
    worst_penrose = std::max({worst_penrose, rel(ap * a - a, a), rel(pa * p - p, p), rel(ap.transpose() - ap, ap),
                              rel(pa.transpose() - pa, pa)});
  }
  const bool pass = worst_whitening < 1e-8 && worst_penrose < 1e-8;
  return {pass, "whitened covariance worst ||C - I||_F " + format_shortest(worst_whitening) + " over " +
                    std::to_string(whitening_fits) + " fits; Penrose worst relative residual " +
                    format_shortest(worst_penrose) + " over 100 matrices (limit 1e-8)"};
}

Outcome ac3_planted_recovery() {
  double worst_purity = 1.0, slowest = 0.0;
  std::size_t vocab = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = Clock::now();
    PlantedConfig cfg;
    cfg.filler = false;  // exactly 5 x 100 terms
    cfg.seed = seed;
    const auto pc = make_planted(cfg);
    const S3Model m = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, 5, RngSeed(seed));
    const auto purity = planted_purity(positive_term_lists(describe_topics(m, 10)), pc);
    slowest = std::max(slowest, seconds_since(t0));
    record_whitening(pc.doc_embeddings.to_matrix(), m.whitener);
    worst_purity = std::min(worst_purity, purity.min());
    vocab = pc.vocab.size();
  }
  return {worst_purity >= 0.8 && slowest < 10.0 && vocab == 500,
          "5 corpora (2000 docs, d=64, 500 terms): worst per-topic purity " + fmt(worst_purity, 2) +
              " (need 0.8), slowest end-to-end " + fmt(slowest, 3) + " s (limit 10 s)"};
}

Outcome ac4_transform() {
  const auto pc = make_planted({});
  const S3Model m = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, 5, RngSeed(4));
  const double reproduce = (transform(m, pc.doc_embeddings) - m.doc_topic).cwiseAbs().maxCoeff();
  double basis = 0.0;
  for (Eigen::Index t = 0; t < 5; ++t) {
    const Matrix s = transform(m, Matrix((m.mean() + m.mixing.col(t)).transpose()));
    for (Eigen::Index j = 0; j < 5; ++j) basis = std::max(basis, std::abs(s(0, j) - (j == t ? 1.0 : 0.0)));
  }
  return {reproduce < 1e-6 && basis < 1e-6, "training rows max-abs " + format_shortest(reproduce) +
                                                ", mean + A[:,t] vs e_t max-abs " + format_shortest(basis) +
                                                " (limit 1e-6)"};
}

Outcome ac5_metric_oracles() {
  const std::vector<TokenList> corpus = {tokenize("apple banana apple cherry"), tokenize("banana cherry"),
                                         tokenize("cherry date apple"), tokenize("date")};
  const TopicTerms topics = {{"apple", "banana", "the"}, {"date", "apple", "x11"}, {"cherry", "date", "of"}};
  const std::map<std::string, std::vector<double>> vecs = {
      {"apple", {1, 2, 0}}, {"banana", {0.5, -1, 2}}, {"date", {3, 0, 1}}, {"x11", {-1, 1, 1}}, {"cherry", {0, 0, 1}}};
  WordVectorTable table(3);
  for (const auto& [tok, v] : vecs) table.set(tok, std::vector<float>(v.begin(), v.end()));
  const auto stop = StopwordList::english();

  // Hand count on the toy corpus with window 2: 7 windows.
  const CooccurrenceCounts counts(corpus, topics, 2);
  const bool hand = counts.windows() == 7 && counts.count("apple") == 4 && counts.count("apple", "banana") == 2 &&
                    counts.count("date", "apple") == 1 && counts.count("cherry", "date") == 1;

  const double errs[] = {
      std::abs(diversity(topics) - oracle::diversity(topics)),
      std::abs(wec(topics, table) - oracle::wec(topics, vecs)),
      std::abs(npmi(topics, corpus, 2) - oracle::npmi(topics, corpus, 2)),
      std::abs(npmi(topics, corpus, 10) - oracle::npmi(topics, corpus, 10)),
      std::abs(stopword_rate(topics, stop) - oracle::stopword_rate(topics, {"the", "of"})),
      std::abs(nonalpha_rate(topics) - oracle::nonalpha_rate(topics)),
  };
  double worst = 0.0;
  for (double e : errs) worst = std::max(worst, e);
  const double single = diversity({{"apple", "banana", "cherry"}});
  return {hand && worst < 1e-12 && single == 1.0,
          std::string("hand counts ") + (hand ? "match" : "DIFFER") + ", worst |library - brute force| " +
              format_shortest(worst) + " (limit 1e-12), single-topic diversity " + format_shortest(single)};
}

Outcome ac6_diversity_direction() {
  int wins = 0;
  double min_s3 = 1.0, max_nmf = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PlantedConfig cfg;
    cfg.seed = seed;
    const auto pc = make_planted(cfg);
    const S3Model m = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, 5, RngSeed(seed));
    const double ds = diversity(positive_term_lists(describe_topics(m, 10)));
    const NmfModel nmf = fit_nmf(bow_counts(pc.tokens, pc.vocab, Weighting::tfidf), 5, RngSeed(seed));
    const double dn = diversity(positive_term_lists(describe_topics_baseline(nmf, pc.vocab, 10)));
    wins += (ds >= 0.9 && ds > dn) ? 1 : 0;
    min_s3 = std::min(min_s3, ds);
    max_nmf = std::max(max_nmf, dn);
  }
  return {wins >= 18, std::to_string(wins) + "/20 seeds with S3 diversity >= 0.9 and above NMF (need 18); S3 min " +
                          fmt(min_s3, 2) + ", NMF max " + fmt(max_nmf, 2)};
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + S3TM_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// reports.csv without the runtime column.
std::string metric_columns(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() > 9) cells.erase(cells.begin() + 9);
    for (const auto& x : cells) out += x + ",";
    out += "\n";
  }
  return out;
}

Outcome ac7_determinism() {
  TempDir tmp;
  PlantedConfig cfg;
  cfg.n_docs = 600;
  cfg.terms_per_axis = 40;
  const auto files = write_fixture(make_planted(cfg), tmp / "in");
  auto q = [](const std::filesystem::path& p) { return "\"" + p.string() + "\""; };
  const std::string args = "--seed 11 --min-df 3 --topics 5,8 bench --models s3,nmf,lsa --corpus " + q(files.corpus) +
                           " --doc-embeddings " + q(files.doc_embeddings) + " --term-embeddings " +
                           q(files.term_embeddings) + " --wordvec-dims 32 --wordvec-epochs 2";
  const int a = run_cli(args + " -o " + q(tmp / "a"), tmp / "a.log");
  const int b = run_cli(args + " -o " + q(tmp / "b"), tmp / "b.log");
  if (a != 0 || b != 0) return {false, "bench exited with " + std::to_string(a) + " and " + std::to_string(b)};
  const std::string ra = slurp(tmp / "a" / "reports.csv");
  const bool metrics_same = metric_columns(ra) == metric_columns(slurp(tmp / "b" / "reports.csv"));
  std::size_t files_compared = 0, files_same = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "a" / "topics")) {
    ++files_compared;
    files_same += slurp(e.path()) == slurp(tmp / "b" / "topics" / e.path().filename()) ? 1 : 0;
  }
  const auto rows = static_cast<std::size_t>(std::count(ra.begin(), ra.end(), '\n')) - 1;
  return {metrics_same && files_compared == 6 && files_same == 6 && rows == 6,
          std::string("metric columns ") + (metrics_same ? "identical" : "DIFFER") + " across " +
              std::to_string(rows) + " reports; " + std::to_string(files_same) + "/" +
              std::to_string(files_compared) + " topic files identical"};
}

std::string letters(std::size_t i) {
  std::string s = "t";
  for (int c = 0; c < 3; ++c) {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  }
  return s;
}

Outcome ac8_speed_ordering() {
  constexpr std::size_t n_docs = 2048, dims = 384, n_terms = 3000, k = 20;
  int faster = 0;
  double slowest_s3 = 0.0, sum_s3 = 0.0, sum_nmf = 0.0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    Rng rng(RngSeed(500 + run));
    const auto docs = EmbeddingMatrix::from_matrix(rng.normal_matrix(n_docs, dims));
    const auto terms = EmbeddingMatrix::from_matrix(rng.normal_matrix(n_terms, dims));
    std::vector<TokenList> tokens(n_docs);
    for (auto& doc : tokens)
      for (int i = 0; i < 60; ++i) doc.push_back(letters(rng.below(n_terms)));
    const Vocabulary vocab = build_vocabulary(tokens, 1, 1.0);
    if (vocab.size() != n_terms) return {false, "synthetic vocabulary has " + std::to_string(vocab.size()) + " terms"};
    const BowMatrix bow = bow_counts(tokens, vocab, Weighting::count);

    auto t0 = Clock::now();
    const S3Model m = fit(docs, terms, vocab, k, RngSeed(run + 1));
    const double s3 = seconds_since(t0);
    t0 = Clock::now();
    const NmfModel nmf = fit_nmf(bow, k, RngSeed(run + 1));
    const double nm = seconds_since(t0);
    record_whitening(docs.to_matrix(), m.whitener);
    faster += s3 < nm ? 1 : 0;
    slowest_s3 = std::max(slowest_s3, s3);
    sum_s3 += s3;
    sum_nmf += nm;
  }
  return {slowest_s3 < 5.0 && faster >= 8,
          "S3 faster in " + std::to_string(faster) + "/10 paired runs (need 8); slowest S3 " + fmt(slowest_s3, 3) +
              " s (limit 5 s); mean S3 " + fmt(sum_s3 / 10, 3) + " s vs NMF " + fmt(sum_nmf / 10, 3) + " s"};
}

Outcome ac9_sign_flip() {
  const auto pc = make_planted({});
  const S3Model base = fit(pc.doc_embeddings, pc.term_embeddings, pc.vocab, 5, RngSeed(9));
  const auto before = describe_topics(base, 10);
  int exact = 0;
  for (std::size_t t = 0; t < 5; ++t) {
    // Negate one mixing column and rebuild everything that depends on it.
    S3Model m = base;
    m.mixing.col(static_cast<Eigen::Index>(t)) *= -1.0;
    m.unmixing = pseudo_inverse(m.mixing);
    m.term_topic = score_terms(pc.term_embeddings.to_matrix(), m.unmixing, m.mean(), true);
    const auto after = describe_topics(m, 10);
    bool ok = after[t].positive_terms() == before[t].negative_terms() &&
              after[t].negative_terms() == before[t].positive_terms();
    for (std::size_t u = 0; u < 5; ++u)
      if (u != t)
        ok = ok && after[u].positive_terms() == before[u].positive_terms() &&
             after[u].negative_terms() == before[u].negative_terms();
    exact += ok ? 1 : 0;
  }
  return {exact == 5, std::to_string(exact) + "/5 axis negations swap that topic's poles and leave others unchanged"};
}

Outcome ac10_sgns() {
  const auto inter = train_sgns(interchangeable_corpus(10000, 1), small_sgns_config(3));
  const float* cat = inter.table.find("cat");
  const float* dog = inter.table.find("dog");
  const std::size_t d = inter.table.dims();
  const double cd = (cat && dog) ? cosine({cat, d}, {dog, d}) : -1.0;

  const auto dis = train_sgns(disjoint_corpus(4000, 2), small_sgns_config(4));
  const auto sim = group_similarity(dis.table);

  bool monotone = loss_nonincreasing(inter.epoch_loss) && loss_nonincreasing(dis.epoch_loss);
  for (std::uint64_t seed : {5, 6, 7}) {
    const auto r = train_sgns(interchangeable_corpus(3000, seed), small_sgns_config(seed));
    monotone = monotone && loss_nonincreasing(r.epoch_loss);
  }
  return {cd > 0.9 && sim.within > sim.across && monotone,
          "cat/dog cosine " + fmt(cd) + " (need > 0.9); within-group " + fmt(sim.within, 3) + " vs across " +
              fmt(sim.across, 3) + "; epoch loss " + (monotone ? "nonincreasing" : "ROSE") + " within 5% (" +
              fmt(inter.epoch_loss.front(), 3) + " -> " + fmt(inter.epoch_loss.back(), 3) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 ica-recovery", ac1_ica_recovery},        {"AC2 whitening-pinv", ac2_whitening_and_pinv},
      {"AC3 planted-axes", ac3_planted_recovery},    {"AC4 transform", ac4_transform},
      {"AC5 metric-oracles", ac5_metric_oracles},    {"AC6 diversity-direction", ac6_diversity_direction},
      {"AC7 determinism", ac7_determinism},          {"AC8 speed-ordering", ac8_speed_ordering},
      {"AC9 sign-flip", ac9_sign_flip},              {"AC10 sgns-sanity", ac10_sgns},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(seconds_since(t0), 1)
              << " s]" << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
