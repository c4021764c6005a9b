#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lowreskit/records.hpp"

/// Medical parallel-corpus extraction by approximate dictionary matching.
namespace lowreskit::med {

struct DictionaryTerm {
  std::string term;
  std::string semantic_type;  // e.g. "Disease or Syndrome", "Clinical Drug"
};

struct TermMatch {
  std::string term;
  double similarity = 0.0;

  bool operator==(const TermMatch&) const = default;
};

/// Character trigrams of the lowercased, whitespace-normalized string, as a
/// multiset (sorted). Strings shorter than three characters yield themselves.
std::vector<std::u32string> trigrams(std::string_view text);

/// Multiset Jaccard over character trigrams: sum(min) / sum(max).
double trigram_jaccard(std::string_view a, std::string_view b);

class MedicalDictionary {
 public:
  explicit MedicalDictionary(std::vector<DictionaryTerm> terms = {}, double similarity_threshold = 0.85);

  /// One "term<TAB>semantic type" per line. Blank lines and '#' comments skipped.
  static MedicalDictionary load(const std::filesystem::path& path, double similarity_threshold = 0.85);

  /// Throws ValidationError unless terms are non-empty and threshold is in (0,1].
  void validate() const;

  /// Best term with similarity >= threshold (ties: earliest term in the dictionary).
  std::optional<TermMatch> term_match(std::string_view candidate) const;
  /// Every term with similarity >= threshold, in dictionary order.
  std::vector<TermMatch> all_matches(std::string_view candidate) const;

  double threshold() const { return threshold_; }
  const std::vector<DictionaryTerm>& terms() const { return terms_; }

 private:
  struct Entry {
    std::vector<std::u32string> grams;
  };
  std::vector<DictionaryTerm> terms_;
  std::vector<Entry> entries_;
  std::unordered_map<std::u32string, std::vector<std::size_t>> index_;
  double threshold_;
};

struct AlignedPair {
  std::string pair_id;
  std::string article_title;
  std::string difficult_text;
  std::string simple_text;
  std::vector<TermMatch> matched_terms;

  bool operator==(const AlignedPair&) const = default;
};

struct MatchCriteria {
  std::size_t min_sentence_terms = 4;
  std::size_t min_title_terms = 1;
  std::size_t max_ngram = 5;
};

/// Word n-grams (n <= max_n) over whitespace tokens with edge punctuation removed.
std::vector<std::string> candidate_spans(std::string_view text, std::size_t max_n);

/// Distinct dictionary terms reached by any candidate span of `text`, with the
/// best similarity per term, in order of first match.
std::vector<TermMatch> matched_terms(std::string_view text, const MedicalDictionary& dictionary, std::size_t max_n);

bool is_medical_pair(const AlignedPair& pair, const MedicalDictionary& dictionary, const MatchCriteria& criteria = {});

struct Extraction {
  std::vector<AlignedPair> medical;  // matched_terms filled in
  std::vector<AlignedPair> remainder;
  std::vector<std::string> diagnostics;
};

Extraction extract_corpus(const std::vector<AlignedPair>& general_corpus, const MedicalDictionary& dictionary,
                          const MatchCriteria& criteria = {});

struct Splits {
  std::vector<AlignedPair> train;
  std::vector<AlignedPair> dev;
  std::vector<AlignedPair> test;
};

/// Seeded shuffle, then dev = test = floor(15% of n), train gets the rest.
Splits split_corpus(const std::vector<AlignedPair>& pairs, std::uint64_t seed);

AlignedPair pair_from_json(const json& record);
json pair_to_json(const AlignedPair& pair);

}  // namespace lowreskit::med
