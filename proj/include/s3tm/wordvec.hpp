#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "s3tm/common.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/embed.hpp"
#include "s3tm/random.hpp"

namespace s3tm {

// Cosine similarity. A zero-norm argument yields 0 and sets *degenerate.
inline double cosine(std::span<const float> a, std::span<const float> b, bool* degenerate = nullptr) {
  if (a.size() != b.size()) fail("cosine: dimension mismatch (", a.size(), " vs ", b.size(), ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (degenerate) *degenerate = (na == 0.0 || nb == 0.0);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct SgnsConfig {
  std::size_t dims = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  double final_lr = 1e-4;
  std::size_t min_count = 5;
  double subsample_threshold = 1e-3;
  RngSeed seed{1};
  // 1 = deterministic single trainer. More threads update shared vectors
  // without locks, so results then depend on scheduling.
  std::size_t threads = 1;
};

struct SgnsResult {
  WordVectorTable table;            // input vectors of retained tokens
  std::vector<double> epoch_loss;   // mean negative objective per positive pair
};

namespace detail {

// Relaxed atomic access in concurrent mode; plain access otherwise.
template <bool Concurrent>
struct Cell {
  static float load(float& x) {
    if constexpr (Concurrent) return std::atomic_ref<float>(x).load(std::memory_order_relaxed);
    else return x;
  }
  static void add(float& x, float delta) {
    if constexpr (Concurrent) {
      std::atomic_ref<float> ref(x);
      ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
    } else {
      x += delta;
    }
  }
};

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

struct SgnsState {
  const SgnsConfig& cfg;
  std::vector<std::vector<std::uint32_t>> sentences;
  std::vector<double> keep_prob;
  std::vector<double> noise_cdf;
  std::vector<float> input;
  std::vector<float> output;
  std::uint64_t words_per_epoch = 0;
  std::atomic<std::uint64_t> processed{0};

  std::uint32_t sample_noise(Rng& rng) const {
    const double u = rng.uniform() * noise_cdf.back();
    auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
    return static_cast<std::uint32_t>(std::min<std::size_t>(it - noise_cdf.begin(), noise_cdf.size() - 1));
  }

  double learning_rate() const {
    const double total = static_cast<double>(words_per_epoch * cfg.epochs);
    const double frac = total > 0 ? static_cast<double>(processed.load(std::memory_order_relaxed)) / total : 0.0;
    return std::max(cfg.final_lr, cfg.initial_lr - (cfg.initial_lr - cfg.final_lr) * frac);
  }

  // One pass over sentences[begin, end). Returns (loss sum, positive pairs).
  template <bool Concurrent>
  std::pair<double, std::uint64_t> run(std::size_t begin, std::size_t end, Rng& rng) {
    using C = Cell<Concurrent>;
    const std::size_t d = cfg.dims;
    std::vector<float> grad(d);
    std::vector<std::uint32_t> kept;
    double loss = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& sentence = sentences[s];
      kept.clear();
      for (std::uint32_t w : sentence)
        if (keep_prob[w] >= 1.0 || rng.uniform() < keep_prob[w]) kept.push_back(w);
      const double lr = learning_rate();
      for (std::size_t pos = 0; pos < kept.size(); ++pos) {
        const std::size_t reach = cfg.window - static_cast<std::size_t>(rng.below(cfg.window));
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(kept.size() - 1, pos + reach);
        float* center = input.data() + static_cast<std::size_t>(kept[pos]) * d;
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          const std::uint32_t target = kept[c];
          std::fill(grad.begin(), grad.end(), 0.0f);
          for (std::size_t n = 0; n <= cfg.negatives; ++n) {
            std::uint32_t word = target;
            double label = 1.0;
            if (n > 0) {
              word = sample_noise(rng);
              if (word == target) continue;
              label = 0.0;
            }
            float* out = output.data() + static_cast<std::size_t>(word) * d;
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += static_cast<double>(C::load(center[i])) * C::load(out[i]);
            loss -= label > 0.0 ? log_sigmoid(dot) : log_sigmoid(-dot);
            const double sig = 1.0 / (1.0 + std::exp(-dot));
            const auto g = static_cast<float>((label - sig) * lr);
            for (std::size_t i = 0; i < d; ++i) {
              grad[i] += g * C::load(out[i]);
              C::add(out[i], g * C::load(center[i]));
            }
          }
          for (std::size_t i = 0; i < d; ++i) C::add(center[i], grad[i]);
          ++pairs;
        }
      }
      processed.fetch_add(sentence.size(), std::memory_order_relaxed);
    }
    return {loss, pairs};
  }
};

}  // namespace detail

// Skip-gram with negative sampling: maximises log s(u_o . v_c) plus
// sum over negatives of log s(-u_n . v_c), noise drawn from unigram^0.75.
// The context reach is sampled uniformly in [1, window] per center token.
inline SgnsResult train_sgns(const std::vector<TokenList>& corpus, const SgnsConfig& cfg) {
  if (cfg.dims == 0 || cfg.window == 0 || cfg.negatives == 0 || cfg.epochs == 0 || cfg.min_count == 0 ||
      cfg.threads == 0 || !(cfg.initial_lr > 0.0) || !(cfg.final_lr > 0.0) || !(cfg.subsample_threshold > 0.0))
    fail("SGNS configuration values must all be positive");

  const TermStats stats = count_terms(corpus);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < stats.terms.size(); ++i)
    if (stats.total_count[i] >= cfg.min_count) order.push_back(i);
  if (order.empty()) fail("no token occurs at least min_count=", cfg.min_count, " times");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return stats.total_count[a] > stats.total_count[b]; });

  detail::SgnsState st{cfg, {}, {}, {}, {}, {}};
  std::unordered_map<std::string_view, std::uint32_t> id_of;
  std::uint64_t retained_total = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    id_of.emplace(stats.terms[order[r]], static_cast<std::uint32_t>(r));
    retained_total += stats.total_count[order[r]];
  }
  st.keep_prob.resize(order.size());
  st.noise_cdf.resize(order.size());
  double cum = 0.0;
  const double thresh = cfg.subsample_threshold * static_cast<double>(retained_total);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double count = static_cast<double>(stats.total_count[order[r]]);
    st.keep_prob[r] = (std::sqrt(count / thresh) + 1.0) * thresh / count;
    cum += std::pow(count, 0.75);
    st.noise_cdf[r] = cum;
  }
  st.sentences.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<std::uint32_t> ids;
    for (const auto& tok : doc)
      if (auto it = id_of.find(tok); it != id_of.end()) ids.push_back(it->second);
    st.words_per_epoch += ids.size();
    if (ids.size() >= 2) st.sentences.push_back(std::move(ids));
  }

  const std::size_t d = cfg.dims;
  Rng init_rng(cfg.seed);
  st.input.resize(order.size() * d);
  for (auto& v : st.input) v = static_cast<float>((init_rng.uniform() - 0.5) / static_cast<double>(d));
  st.output.assign(order.size() * d, 0.0f);

  SgnsResult result;
  const std::size_t threads = std::min(cfg.threads, std::max<std::size_t>(1, st.sentences.size()));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::uint64_t pairs = 0;
    if (threads == 1) {
      Rng rng(RngSeed(cfg.seed.value * 0x9E3779B97F4A7C15ull + epoch + 1));
      std::tie(loss, pairs) = st.run<false>(0, st.sentences.size(), rng);
    } else {
      std::vector<std::pair<double, std::uint64_t>> parts(threads);
      std::vector<std::thread> workers;
      const std::size_t chunk = (st.sentences.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          Rng rng(RngSeed(cfg.seed.value * 0x9E3779B97F4A7C15ull + epoch * 1000003ull + t + 1));
          const std::size_t b = std::min(st.sentences.size(), t * chunk);
          const std::size_t e = std::min(st.sentences.size(), b + chunk);
          parts[t] = st.run<true>(b, e, rng);
        });
      }
      for (auto& w : workers) w.join();
      for (const auto& [l, p] : parts) {
        loss += l;
        pairs += p;
      }
    }
    result.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }

  result.table = WordVectorTable(d);
  for (std::size_t r = 0; r < order.size(); ++r)
    result.table.set(stats.terms[order[r]], std::span<const float>(st.input.data() + r * d, d));
  return result;
}

}  // namespace s3tm
