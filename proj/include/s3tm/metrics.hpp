#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3tm/binary_io.hpp"
#include "s3tm/common.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/embed.hpp"
#include "s3tm/stopwords_en.hpp"
#include "s3tm/utf8.hpp"
#include "s3tm/wordvec.hpp"

namespace s3tm {

using TopicTerms = std::vector<std::vector<std::string>>;

namespace detail {

inline std::size_t total_slots(const TopicTerms& topics) {
  std::size_t n = 0;
  for (const auto& t : topics) n += t.size();
  return n;
}

}  // namespace detail

// |unique terms| / (n_topics * k).
inline double diversity(const TopicTerms& topics) {
  if (topics.empty()) fail("diversity needs at least one topic");
  const std::size_t k = topics.front().size();
  if (k == 0) fail("diversity needs k >= 1");
  std::unordered_set<std::string_view> unique;
  for (const auto& t : topics) {
    if (t.size() != k) fail("diversity needs equal-length term lists (", t.size(), " vs ", k, ")");
    unique.insert(t.begin(), t.end());
  }
  return static_cast<double>(unique.size()) / static_cast<double>(topics.size() * k);
}

// Mean pairwise cosine per topic, averaged over topics. Pairs with a term
// missing from the table are skipped; topics with no scorable pair are skipped.
inline double wec(const TopicTerms& topics, const WordVectorTable& table) {
  double total = 0.0;
  std::size_t scored = 0;
  for (const auto& t : topics) {
    if (t.size() < 2) fail("WEC needs at least 2 terms per topic");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const float* a = table.find(t[i]);
      if (!a) continue;
      for (std::size_t j = i + 1; j < t.size(); ++j) {
        const float* b = table.find(t[j]);
        if (!b) continue;
        sum += cosine({a, table.dims()}, {b, table.dims()});
        ++pairs;
      }
    }
    if (pairs == 0) continue;
    total += sum / static_cast<double>(pairs);
    ++scored;
  }
  if (scored == 0) fail("WEC: no topic has a pair of terms present in the word-vector table");
  return total / static_cast<double>(scored);
}

// Boolean sliding-window counts over one corpus, restricted to a term set.
// Every window of `window` consecutive tokens is counted once; documents
// shorter than the window form a single window; empty documents form none.
class CooccurrenceCounts {
 public:
  CooccurrenceCounts(const std::vector<TokenList>& corpus, const TopicTerms& topics, std::size_t window) {
    if (window < 2) fail("NPMI window must be >= 2");
    for (const auto& t : topics)
      for (const auto& term : t) index_.try_emplace(term, static_cast<std::uint32_t>(index_.size()));
    single_.assign(index_.size(), 0);
    for (const auto& t : topics)
      for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j) {
          const auto a = index_.at(t[i]), b = index_.at(t[j]);
          if (a != b) pair_.try_emplace(key(a, b), 0);
        }

    std::vector<std::int64_t> ids;
    std::vector<std::uint32_t> present;
    for (const auto& doc : corpus) {
      if (doc.empty()) continue;
      ids.clear();
      for (const auto& tok : doc) {
        auto it = index_.find(tok);
        ids.push_back(it == index_.end() ? -1 : static_cast<std::int64_t>(it->second));
      }
      const std::size_t len = std::min(window, ids.size());
      for (std::size_t start = 0; start + len <= ids.size(); ++start) {
        count_window(ids, start, len, present);
        ++n_windows_;
      }
    }
  }

  std::uint64_t windows() const { return n_windows_; }

  std::uint64_t count(std::string_view term) const {
    auto it = index_.find(std::string(term));
    return it == index_.end() ? 0 : single_[it->second];
  }

  std::uint64_t count(std::string_view a, std::string_view b) const {
    auto ia = index_.find(std::string(a)), ib = index_.find(std::string(b));
    if (ia == index_.end() || ib == index_.end()) return 0;
    if (ia->second == ib->second) return single_[ia->second];
    auto it = pair_.find(key(ia->second, ib->second));
    return it == pair_.end() ? 0 : it->second;
  }

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  void count_window(const std::vector<std::int64_t>& ids, std::size_t start, std::size_t len,
                    std::vector<std::uint32_t>& present) {
    present.clear();
    for (std::size_t p = start; p < start + len; ++p) {
      if (ids[p] < 0) continue;
      const auto id = static_cast<std::uint32_t>(ids[p]);
      // First occurrence inside the window only.
      if (std::find(present.begin(), present.end(), id) == present.end()) present.push_back(id);
    }
    for (std::size_t i = 0; i < present.size(); ++i) {
      ++single_[present[i]];
      for (std::size_t j = i + 1; j < present.size(); ++j)
        if (auto it = pair_.find(key(present[i], present[j])); it != pair_.end()) ++it->second;
    }
  }

  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::uint64_t> single_;
  std::unordered_map<std::uint64_t, std::uint64_t> pair_;
  std::uint64_t n_windows_ = 0;
};

// ln(P(ij) / (P(i) P(j))) / -ln P(ij); -1 when the pair never co-occurs and
// 1 when P(ij) = 1.
inline double npmi_from_counts(std::uint64_t ci, std::uint64_t cj, std::uint64_t cij, std::uint64_t n) {
  if (cij == 0 || n == 0) return -1.0;
  const double N = static_cast<double>(n);
  const double pij = static_cast<double>(cij) / N;
  if (cij == n) return 1.0;
  const double pi = static_cast<double>(ci) / N, pj = static_cast<double>(cj) / N;
  return std::clamp(std::log(pij / (pi * pj)) / -std::log(pij), -1.0, 1.0);
}

// Mean pair NPMI per topic, averaged over topics. Terms absent from the
// corpus are appended to *absent.
inline double npmi(const TopicTerms& topics, const std::vector<TokenList>& corpus, std::size_t window = 10,
                   std::vector<std::string>* absent = nullptr) {
  const CooccurrenceCounts counts(corpus, topics, window);
  double total = 0.0;
  std::size_t scored = 0;
  std::unordered_set<std::string> reported;
  for (const auto& t : topics) {
    if (t.size() < 2) fail("NPMI needs at least 2 terms per topic");
    if (absent)
      for (const auto& term : t)
        if (counts.count(term) == 0 && reported.insert(term).second) absent->push_back(term);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = i + 1; j < t.size(); ++j) {
        sum += npmi_from_counts(counts.count(t[i]), counts.count(t[j]), counts.count(t[i], t[j]),
                                counts.windows());
        ++pairs;
      }
    total += sum / static_cast<double>(pairs);
    ++scored;
  }
  if (scored == 0) fail("NPMI needs at least one topic");
  return total / static_cast<double>(scored);
}

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::unordered_set<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) fail("stop-word list is empty");
  }

  static StopwordList english() {
    std::unordered_set<std::string> words;
    for (auto w : kEnglishStopwords) words.emplace(w);
    return StopwordList(std::move(words));
  }

  // One token per line; '#' starts a comment line. Entries are lowercased.
  static StopwordList parse(std::string_view text) {
    std::unordered_set<std::string> words;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
      if (line.empty() || line.front() == '#') continue;
      std::string lowered;
      std::size_t p = 0;
      while (p < line.size()) {
        auto cp = utf8::decode(line, p);
        if (!cp) fail("stop-word list contains invalid UTF-8");
        utf8::encode(utf8::to_lower(*cp), lowered);
      }
      words.insert(std::move(lowered));
    }
    return StopwordList(std::move(words));
  }

  static StopwordList load(const std::filesystem::path& path) { return parse(binary::read_file(path)); }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline double stopword_rate(const TopicTerms& topics, const StopwordList& list) {
  if (list.size() == 0) fail("stop-word list is empty");
  const std::size_t slots = detail::total_slots(topics);
  if (slots == 0) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : topics)
    for (const auto& term : t) hits += list.contains(term) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(slots);
}

inline bool has_nonalpha(std::string_view term) {
  std::size_t pos = 0;
  while (pos < term.size()) {
    auto cp = utf8::decode(term, pos);
    if (!cp || !utf8::is_alpha(*cp)) return true;
  }
  return false;
}

inline double nonalpha_rate(const TopicTerms& topics) {
  const std::size_t slots = detail::total_slots(topics);
  if (slots == 0) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : topics)
    for (const auto& term : t) hits += has_nonalpha(term) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(slots);
}

// One row of a benchmark. Unavailable metrics are NaN (empty in CSV, null in
// JSON).
struct MetricReport {
  std::string model_name;
  std::string encoder_tag;
  std::size_t n_topics = 0;
  double diversity = std::numeric_limits<double>::quiet_NaN();
  double wec_in = std::numeric_limits<double>::quiet_NaN();
  double wec_ex = std::numeric_limits<double>::quiet_NaN();
  double npmi = std::numeric_limits<double>::quiet_NaN();
  double stopword_rate = std::numeric_limits<double>::quiet_NaN();
  double nonalpha_rate = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;

  static constexpr std::array<std::string_view, 11> kFields = {
      "model_name", "encoder_tag", "n_topics", "diversity", "wec_in", "wec_ex",
      "npmi", "stopword_rate", "nonalpha_rate", "runtime_seconds", "seed"};

  // Metric columns in field order, with their values.
  std::array<std::pair<std::string_view, double>, 7> metrics() const {
    return {{{"diversity", diversity},
             {"wec_in", wec_in},
             {"wec_ex", wec_ex},
             {"npmi", npmi},
             {"stopword_rate", stopword_rate},
             {"nonalpha_rate", nonalpha_rate},
             {"runtime_seconds", runtime_seconds}}};
  }
};

namespace detail {

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

inline std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_shortest(v); }

}  // namespace detail

inline std::string metric_csv_header() {
  std::string out;
  for (std::size_t i = 0; i < MetricReport::kFields.size(); ++i) {
    if (i) out.push_back(',');
    out += MetricReport::kFields[i];
  }
  return out + "\n";
}

inline std::string to_csv_row(const MetricReport& r) {
  std::string out = detail::csv_escape(r.model_name) + "," + detail::csv_escape(r.encoder_tag) + "," +
                    std::to_string(r.n_topics);
  for (const auto& [name, value] : r.metrics()) out += "," + detail::csv_number(value);
  return out + "," + std::to_string(r.seed) + "\n";
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["model_name"] = r.model_name;
  j["encoder_tag"] = r.encoder_tag;
  j["n_topics"] = r.n_topics;
  for (const auto& [name, value] : r.metrics()) {
    if (std::isnan(value)) j[std::string(name)] = nullptr;
    else j[std::string(name)] = value;
  }
  j["seed"] = r.seed;
  return j;
}

}  // namespace s3tm
