#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <sstream>

#include "s3tm/embed.hpp"
#include "s3tm/random.hpp"
#include "support/tempdir.hpp"

using namespace s3tm;
using s3tm::testing::slurp;
using s3tm::testing::TempDir;

namespace {

std::string le32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  return s;
}

std::string f32(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  return le32(bits);
}

WordVectorTable cat_dog() {
  return parse_word_vectors("cat 1 0\ndog 0 1\n", "inline");
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dims, std::uint64_t seed) {
  Rng rng{RngSeed(seed)};
  EmbeddingMatrix m(rows, dims);
  for (auto& v : m.data) v = static_cast<float>(rng.normal());
  return m;
}

}  // namespace

TEST(Emb1, HandBuiltFileLoads) {
  TempDir dir;
  std::string bytes = "EMB1" + le32(2) + le32(3) + std::string(1, '\0');
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.5f}) bytes += f32(v);
  const auto m = load_embeddings(dir.write("m.emb", bytes));
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.dims, 3u);
  EXPECT_EQ(m.data, (std::vector<float>{1, 2, 3, 4, 5, 6.5f}));
  EXPECT_FALSE(m.has_labels());
}

TEST(Emb1, RoundTripIsBitwise) {
  TempDir dir;
  auto m = random_matrix(17, 5, 3);
  m.row_labels.clear();
  for (std::size_t i = 0; i < m.rows; ++i) m.row_labels.push_back("térm" + std::to_string(i));
  save_embeddings(m, dir / "m.emb");
  EXPECT_EQ(load_embeddings(dir / "m.emb"), m);
  const std::string first = slurp(dir / "m.emb");
  save_embeddings(load_embeddings(dir / "m.emb"), dir / "m.emb");
  EXPECT_EQ(slurp(dir / "m.emb"), first);
}

TEST(Emb1, OneByOneFileSize) {
  TempDir dir;
  EmbeddingMatrix m(1, 1);
  m.data[0] = 42.5f;
  save_embeddings(m, dir / "one.emb");
  const std::string bytes = slurp(dir / "one.emb");
  // magic(4) + rows(4) + dims(4) + has_labels(1) + one float(4)
  EXPECT_EQ(bytes.size(), 4u + 4u + 4u + 1u + 4u);
  EXPECT_EQ(bytes.substr(13), f32(42.5f));
}

TEST(Emb1, RejectsEmptyAndNonFinite) {
  TempDir dir;
  try {
    save_embeddings(EmbeddingMatrix(0, 4), dir / "e.emb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty matrix"), std::string::npos);
  }
  auto m = random_matrix(2, 2, 1);
  m.data[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(save_embeddings(m, dir / "nan.emb"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "nan.emb"));
}

TEST(Emb1, CorruptFilesNameTheOffset) {
  TempDir dir;
  EXPECT_THROW(load_embeddings(dir.write("bad.emb", "EMB2")), Error);
  std::string truncated = "EMB1" + le32(2) + le32(2) + std::string(1, '\0') + f32(1.0f);
  try {
    load_embeddings(dir.write("short.emb", truncated));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_embeddings(dir.write("trail.emb", "EMB1" + le32(1) + le32(1) + std::string(1, '\0') +
                                                          f32(1.0f) + "x")),
               Error);
}

TEST(Csv, ParsesHeaderlessRows) {
  TempDir dir;
  const auto m = load_embeddings(dir.write("m.csv", "1.0,2.0\n3.0,4.0"));
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.dims, 2u);
  EXPECT_EQ(m.data, (std::vector<float>{1, 2, 3, 4}));
}

TEST(Csv, RaggedRowsAndRoundTrip) {
  TempDir dir;
  EXPECT_THROW(load_embeddings(dir.write("r.csv", "1,2\n3\n")), Error);
  EXPECT_THROW(load_embeddings(dir.write("x.csv", "1,abc\n")), Error);
  const auto m = random_matrix(6, 3, 9);
  save_embeddings(m, dir / "m.csv");
  EXPECT_EQ(load_embeddings(dir / "m.csv"), m);
}

TEST(WordVectors, ParsesTokensAndDims) {
  const auto t = cat_dog();
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dims(), 2u);
  EXPECT_EQ(t.find("dog")[1], 1.0f);
  EXPECT_EQ(t.find("cow"), nullptr);
}

TEST(WordVectors, LastDuplicateWins) {
  const auto t = parse_word_vectors("cat 1 0\ndog 0 1\ncat 5 6\n", "inline");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.find("cat")[0], 5.0f);
  EXPECT_EQ(t.find("cat")[1], 6.0f);
}

TEST(WordVectors, SkipsWord2vecHeaderAndRejectsRagged) {
  EXPECT_EQ(parse_word_vectors("2 2\ncat 1 0\ndog 0 1\n", "inline").size(), 2u);
  EXPECT_THROW(parse_word_vectors("cat 1 0\ndog 0\n", "inline"), Error);
  EXPECT_THROW(parse_word_vectors("cat 1 zz\n", "inline"), Error);
}

TEST(WordVectors, TokenSetMatchesNaiveReparse) {
  TempDir dir;
  Rng rng{RngSeed(4)};
  std::string text;
  for (int i = 0; i < 50; ++i) {
    text += "w" + std::to_string(rng.below(40));
    for (int d = 0; d < 4; ++d) text += " " + format_shortest(static_cast<float>(rng.normal()));
    text += "\n";
  }
  const auto table = load_word_vectors(dir.write("v.txt", text));
  std::map<std::string, std::vector<float>> naive;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::vector<float> v;
    float x;
    while (ls >> x) v.push_back(x);
    naive[tok] = v;
  }
  ASSERT_EQ(table.size(), naive.size());
  for (const auto& [tok, v] : naive) {
    const float* got = table.find(tok);
    ASSERT_NE(got, nullptr) << tok;
    EXPECT_EQ(std::vector<float>(got, got + 4), v);
  }
  save_word_vectors(table, dir / "out.txt");
  const auto again = load_word_vectors(dir / "out.txt");
  for (const auto& tok : table.tokens())
    EXPECT_EQ(std::vector<float>(again.find(tok), again.find(tok) + 4),
              std::vector<float>(table.find(tok), table.find(tok) + 4));
}

TEST(StaticEncoder, MeanOfKnownTokens) {
  const auto m = encode_documents_static(std::vector<Document>{{"d", "cat dog"}, {"e", "unknown words"}}, cat_dog());
  EXPECT_EQ(m.at(0, 0), 0.5f);
  EXPECT_EQ(m.at(0, 1), 0.5f);
  EXPECT_EQ(m.at(1, 0), 0.0f);
  EXPECT_EQ(m.at(1, 1), 0.0f);
  EXPECT_EQ(m.row_labels, (std::vector<std::string>{"d", "e"}));
}

TEST(StaticEncoder, MatchesBruteForceAveraging) {
  Rng rng{RngSeed(12)};
  WordVectorTable table(3);
  for (int w = 0; w < 15; ++w) {
    std::vector<float> v = {static_cast<float>(rng.normal()), static_cast<float>(rng.normal()),
                            static_cast<float>(rng.normal())};
    table.set("tok" + std::to_string(w), v);
  }
  std::vector<TokenList> corpus;
  for (int d = 0; d < 20; ++d) {
    TokenList doc;
    for (std::size_t i = 0, n = rng.below(8); i < n; ++i) doc.push_back("tok" + std::to_string(rng.below(20)));
    corpus.push_back(doc);
  }
  const auto m = encode_documents_static(corpus, table);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    double sum[3] = {0, 0, 0};
    int hits = 0;
    for (const auto& t : corpus[d]) {
      const float* v = table.find(t);
      if (!v) continue;
      ++hits;
      for (int c = 0; c < 3; ++c) sum[c] += v[c];
    }
    for (std::size_t c = 0; c < 3; ++c)
      EXPECT_FLOAT_EQ(m.at(d, c), hits ? static_cast<float>(sum[c] / hits) : 0.0f);
  }
  // Token order inside a document does not matter.
  auto shuffled = corpus;
  for (auto& doc : shuffled) std::reverse(doc.begin(), doc.end());
  const auto m2 = encode_documents_static(shuffled, table);
  for (std::size_t i = 0; i < m.data.size(); ++i) EXPECT_NEAR(m.data[i], m2.data[i], 1e-6);
}

TEST(VocabularyEncoding, StaticTable) {
  Vocabulary v;
  v.terms = {"cat", "dog", "cow"};
  v.reindex();
  const auto enc = encode_vocabulary(v, cat_dog());
  EXPECT_EQ(enc.matrix.data, (std::vector<float>{1, 0, 0, 1, 0, 0}));
  EXPECT_EQ(enc.missing, (std::vector<std::string>{"cow"}));
  for (float x : enc.matrix.data) EXPECT_TRUE(std::isfinite(x));
}

TEST(VocabularyEncoding, PrecomputedGatherByLabel) {
  Rng rng{RngSeed(21)};
  Vocabulary v;
  for (int i = 0; i < 100; ++i) v.terms.push_back("term" + std::to_string(i));
  v.reindex();
  // File rows are a shuffled copy plus extras.
  std::vector<std::size_t> perm(100);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  EmbeddingMatrix file(105, 4);
  for (std::size_t r = 0; r < 105; ++r) {
    file.row_labels.push_back(r < 100 ? v.terms[perm[r]] : "extra" + std::to_string(r));
    for (std::size_t c = 0; c < 4; ++c) file.at(r, c) = static_cast<float>(rng.normal());
  }
  const auto out = encode_vocabulary(v, file);
  ASSERT_EQ(out.rows, 100u);
  for (std::size_t t = 0; t < 100; ++t) {
    const auto src = static_cast<std::size_t>(std::find(file.row_labels.begin(), file.row_labels.end(), v.terms[t]) -
                                              file.row_labels.begin());
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out.at(t, c), file.at(src, c));
  }
  file.row_labels[0] = "renamed";
  EXPECT_THROW(encode_vocabulary(v, file), Error);
}
