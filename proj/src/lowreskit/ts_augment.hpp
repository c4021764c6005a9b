#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lowreskit/records.hpp"

/// Training-set augmentation through text simplification.
namespace lowreskit::ts {

enum class Role { subject, object, premise, hypothesis, none };

struct CriticalSpan {
  Role role = Role::none;
  std::string surface;

  bool operator==(const CriticalSpan&) const = default;
};

enum class Provenance { original, simplified };

struct TaggedExample {
  std::string example_id;
  std::string text;
  std::vector<CriticalSpan> critical_spans;
  std::string label;
  Provenance provenance = Provenance::original;
  /// For simplified records: the example_id of the original it came from.
  std::string parent_id;

  bool operator==(const TaggedExample&) const = default;
};

/// text -> text rewriter. Implementations may throw to signal failure on an input.
class Simplifier {
 public:
  virtual ~Simplifier() = default;
  virtual std::string name() const = 0;
  virtual std::string simplify(const std::string& text) = 0;
  virtual bool deterministic() const { return true; }
  /// Whether simplify() may be called concurrently on one instance.
  virtual bool reentrant() const { return false; }
};

class IdentitySimplifier : public Simplifier {
 public:
  std::string name() const override { return "identity"; }
  std::string simplify(const std::string& text) override { return text; }
  bool reentrant() const override { return true; }
};

/// Rule-lite rewriter: word-level synonym substitution, then a split into
/// clauses at commas.
class ReferenceSimplifier : public Simplifier {
 public:
  ReferenceSimplifier();
  explicit ReferenceSimplifier(std::map<std::string, std::string> synonyms);
  std::string name() const override { return "reference"; }
  std::string simplify(const std::string& text) override;
  bool reentrant() const override { return true; }

 private:
  std::map<std::string, std::string> synonyms_;
};

/// Precomputed simplifications (e.g. from an external neural system), keyed by
/// the original text. Unknown inputs fail.
class LookupSimplifier : public Simplifier {
 public:
  explicit LookupSimplifier(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  std::string name() const override { return "lookup"; }
  std::string simplify(const std::string& text) override;
  bool reentrant() const override { return true; }

 private:
  std::map<std::string, std::string> table_;
};

enum class CompositionKind { original, simplified, simplified_plus_complement, simplified_plus_original, swapped };

struct CompositionStrategy {
  CompositionKind kind = CompositionKind::simplified_plus_original;
  double sample_fraction_p = 0.0;
  std::uint64_t rng_seed = 0;
};

CompositionKind composition_kind_from_string(std::string_view name);
std::string to_string(CompositionKind kind);

/// Uniform draw in [0,1) for an example; shared by sampling and swapping so the
/// same seed and p pick the same examples.
double sample_draw(std::string_view example_id, std::uint64_t seed);

/// Simplify the examples whose draw is below p. Failures are skipped and logged.
std::vector<TaggedExample> sample_and_simplify(const std::vector<TaggedExample>& examples, Simplifier& simplifier,
                                               double p, std::uint64_t seed);

/// True iff every critical surface occurs in the simplified text
/// (case-insensitive, whitespace-normalized substring). Vacuously true when
/// the example has no critical spans.
bool preserves_critical_info(const TaggedExample& original, const std::string& simplified_text);

std::vector<TaggedExample> compose_training_set(const std::vector<TaggedExample>& originals,
                                                const std::vector<TaggedExample>& simplified,
                                                const CompositionStrategy& strategy);

/// Sentence BLEU of `hypothesis` against the single reference `reference`:
/// n <= 4, add-one smoothing on the n > 1 precisions, brevity penalty.
double sentence_bleu(const std::string& hypothesis, const std::string& reference);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and population standard deviation of sentence BLEU of the simplified
/// text against its original.
MeanStd bleu_divergence(const std::vector<std::pair<std::string, std::string>>& pairs);

TaggedExample tagged_from_json(const json& record);
json tagged_to_json(const TaggedExample& example);

}  // namespace lowreskit::ts
