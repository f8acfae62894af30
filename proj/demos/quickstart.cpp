// Fits a three-topic model on a tiny generated corpus and prints the topics.
//
//   ./s3tm_quickstart
#include <iostream>

#include "s3tm/s3tm.hpp"

int main() {
  using namespace s3tm;

  const std::vector<std::vector<std::string>> themes = {
      {"goal", "striker", "league", "match", "keeper", "referee", "penalty", "season"},
      {"compiler", "kernel", "thread", "memory", "pointer", "cache", "runtime", "linker"},
      {"butter", "flour", "oven", "dough", "sugar", "recipe", "whisk", "bake"},
  };

  // Word vectors: one random direction per theme plus per-word noise.
  Rng rng(RngSeed(7));
  const std::size_t dims = 32;
  WordVectorTable table(dims);
  for (const auto& theme : themes) {
    std::vector<double> axis(dims);
    for (auto& v : axis) v = rng.normal();
    for (const auto& word : theme) {
      std::vector<float> vec(dims);
      for (std::size_t i = 0; i < dims; ++i) vec[i] = static_cast<float>(axis[i] + 0.3 * rng.normal());
      table.set(word, vec);
    }
  }
  // Filler words sit near the origin; their varying share keeps the theme
  // weights from being tied to each other by the averaging.
  const std::vector<std::string> filler = {"the", "and", "of", "to", "in", "is"};
  for (const auto& word : filler) {
    std::vector<float> vec(dims);
    for (auto& v : vec) v = static_cast<float>(0.1 * rng.normal());
    table.set(word, vec);
  }

  // Each theme enters a document independently, so the themes act as
  // independent signals in embedding space.
  std::vector<Document> docs;
  for (int d = 0; d < 600; ++d) {
    std::string text;
    for (std::size_t n = 4 + rng.below(12); n > 0; --n) text += filler[rng.below(filler.size())] + " ";
    for (const auto& theme : themes) {
      if (rng.uniform() >= 0.4) continue;
      const std::size_t n = 1 + rng.below(8);
      for (std::size_t w = 0; w < n; ++w) text += theme[rng.below(theme.size())] + " ";
    }
    docs.push_back({std::to_string(d), text});
  }

  const auto tokens = tokenize_all(docs);
  const Vocabulary vocab = build_vocabulary(tokens, 2, 1.0);
  const EmbeddingMatrix x = encode_documents_static(tokens, table);
  const EmbeddingMatrix terms = encode_vocabulary(vocab, table).matrix;

  const S3Model model = fit(x, terms, vocab, 3, RngSeed(42));
  for (const auto& topic : describe_topics(model, 5)) {
    std::cout << "topic " << topic.topic_id << ":";
    for (const auto& t : topic.positive) std::cout << " " << t.term;
    std::cout << "\n";
  }
}
