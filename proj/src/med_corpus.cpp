#include "lowreskit/med_corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "lowreskit/common.hpp"

namespace lowreskit::med {

std::vector<std::u32string> trigrams(std::string_view text) {
  const auto s = decode_utf8(to_lower(normalize_ws(text)));
  std::vector<std::u32string> grams;
  if (s.empty()) return grams;
  if (s.size() < 3) {
    grams.push_back(s);
    return grams;
  }
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) grams.push_back(s.substr(i, 3));
  std::sort(grams.begin(), grams.end());
  return grams;
}

namespace {

// Both inputs sorted multisets.
double jaccard_sorted(const std::vector<std::u32string>& a, const std::vector<std::u32string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  // |A ∪ B| for multisets = |A| + |B| - |A ∩ B|.
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string strip_edge_punct(const std::string& token) {
  static constexpr std::string_view kPunct = ".,;:!?\"'()[]{}";
  std::size_t b = 0, e = token.size();
  while (b < e && kPunct.find(token[b]) != std::string_view::npos) ++b;
  while (e > b && kPunct.find(token[e - 1]) != std::string_view::npos) --e;
  return token.substr(b, e - b);
}

}  // namespace

double trigram_jaccard(std::string_view a, std::string_view b) { return jaccard_sorted(trigrams(a), trigrams(b)); }

MedicalDictionary::MedicalDictionary(std::vector<DictionaryTerm> terms, double similarity_threshold)
    : terms_(std::move(terms)), threshold_(similarity_threshold) {
  if (!(threshold_ > 0.0 && threshold_ <= 1.0)) throw ValidationError("similarity threshold must lie in (0,1]");
  entries_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    auto grams = trigrams(terms_[i].term);
    if (grams.empty()) throw ValidationError("empty dictionary term");
    std::set<std::u32string> distinct(grams.begin(), grams.end());
    for (const auto& g : distinct) index_[g].push_back(i);
    entries_.push_back({std::move(grams)});
  }
}

MedicalDictionary MedicalDictionary::load(const std::filesystem::path& path, double similarity_threshold) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dictionary " + path.string());
  std::vector<DictionaryTerm> terms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize_ws(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected term<TAB>semantic type");
    }
    terms.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  MedicalDictionary dict(std::move(terms), similarity_threshold);
  dict.validate();
  return dict;
}

void MedicalDictionary::validate() const {
  if (terms_.empty()) throw ValidationError("medical dictionary has no terms");
  if (!(threshold_ > 0.0 && threshold_ <= 1.0)) throw ValidationError("similarity threshold must lie in (0,1]");
}

std::vector<TermMatch> MedicalDictionary::all_matches(std::string_view candidate) const {
  const auto grams = trigrams(candidate);
  if (grams.empty()) throw ValidationError("term_match candidate must be non-empty");
  std::set<std::size_t> pool;
  for (std::size_t i = 0; i < grams.size(); ++i) {
    if (i > 0 && grams[i] == grams[i - 1]) continue;
    if (auto it = index_.find(grams[i]); it != index_.end()) pool.insert(it->second.begin(), it->second.end());
  }
  std::vector<TermMatch> out;
  const double n = static_cast<double>(grams.size());
  for (std::size_t idx : pool) {
    const double m = static_cast<double>(entries_[idx].grams.size());
    // Jaccard <= min/max of the multiset sizes.
    if (std::min(n, m) / std::max(n, m) < threshold_) continue;
    const double sim = jaccard_sorted(grams, entries_[idx].grams);
    if (sim >= threshold_) out.push_back({terms_[idx].term, sim});
  }
  return out;  // std::set iteration keeps dictionary order
}

std::optional<TermMatch> MedicalDictionary::term_match(std::string_view candidate) const {
  std::optional<TermMatch> best;
  for (auto& m : all_matches(candidate)) {
    if (!best || m.similarity > best->similarity) best = std::move(m);
  }
  return best;
}

std::vector<std::string> candidate_spans(std::string_view text, std::size_t max_n) {
  std::vector<std::string> tokens;
  for (const auto& t : split_ws(text)) {
    auto s = strip_edge_punct(t);
    if (!s.empty()) tokens.push_back(std::move(s));
  }
  std::vector<std::string> spans;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string span;
    for (std::size_t n = 1; n <= max_n && i + n <= tokens.size(); ++n) {
      if (n > 1) span += ' ';
      span += tokens[i + n - 1];
      spans.push_back(span);
    }
  }
  return spans;
}

std::vector<TermMatch> matched_terms(std::string_view text, const MedicalDictionary& dictionary, std::size_t max_n) {
  std::vector<TermMatch> found;
  std::map<std::string, std::size_t> pos;
  for (const auto& span : candidate_spans(text, max_n)) {
    for (auto& m : dictionary.all_matches(span)) {
      auto [it, inserted] = pos.try_emplace(m.term, found.size());
      if (inserted) {
        found.push_back(std::move(m));
      } else if (m.similarity > found[it->second].similarity) {
        found[it->second].similarity = m.similarity;
      }
    }
  }
  return found;
}

bool is_medical_pair(const AlignedPair& pair, const MedicalDictionary& dictionary, const MatchCriteria& criteria) {
  if (pair.article_title.empty() || pair.difficult_text.empty()) {
    throw ValidationError("pair " + pair.pair_id + " lacks a title or difficult sentence");
  }
  return matched_terms(pair.difficult_text, dictionary, criteria.max_ngram).size() >= criteria.min_sentence_terms &&
         matched_terms(pair.article_title, dictionary, criteria.max_ngram).size() >= criteria.min_title_terms;
}

Extraction extract_corpus(const std::vector<AlignedPair>& general_corpus, const MedicalDictionary& dictionary,
                          const MatchCriteria& criteria) {
  Extraction out;
  for (const auto& pair : general_corpus) {
    if (normalize_ws(pair.article_title).empty() || normalize_ws(pair.difficult_text).empty() ||
        normalize_ws(pair.simple_text).empty()) {
      out.diagnostics.push_back("skipping malformed pair '" + pair.pair_id + "': empty title or sentence");
      continue;
    }
    if (is_medical_pair(pair, dictionary, criteria)) {
      AlignedPair p = pair;
      p.matched_terms = matched_terms(pair.difficult_text, dictionary, criteria.max_ngram);
      out.medical.push_back(std::move(p));
    } else {
      out.remainder.push_back(pair);
    }
  }
  return out;
}

Splits split_corpus(const std::vector<AlignedPair>& pairs, std::uint64_t seed) {
  if (pairs.size() < 3) throw ValidationError("splitting needs at least 3 pairs");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t held = pairs.size() * 15 / 100;
  const std::size_t train = pairs.size() - 2 * held;
  Splits s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dest = i < train ? s.train : (i < train + held ? s.dev : s.test);
    dest.push_back(pairs[order[i]]);
  }
  return s;
}

AlignedPair pair_from_json(const json& r) {
  AlignedPair p;
  p.pair_id = optional_field<std::string>(r, "id", "");
  p.article_title = require<std::string>(r, "title");
  p.difficult_text = require<std::string>(r, "difficult");
  p.simple_text = require<std::string>(r, "simple");
  if (auto it = r.find("matched_terms"); it != r.end() && it->is_array()) {
    for (const auto& m : *it) p.matched_terms.push_back({require<std::string>(m, "term"), require<double>(m, "similarity")});
  }
  return p;
}

json pair_to_json(const AlignedPair& p) {
  json matches = json::array();
  for (const auto& m : p.matched_terms) matches.push_back({{"term", m.term}, {"similarity", m.similarity}});
  json r{{"title", p.article_title}, {"difficult", p.difficult_text}, {"simple", p.simple_text}};
  if (!p.pair_id.empty()) r["id"] = p.pair_id;
  if (!p.matched_terms.empty()) r["matched_terms"] = matches;
  return r;
}

}  // namespace lowreskit::med
