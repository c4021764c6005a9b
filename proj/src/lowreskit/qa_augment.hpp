#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lowreskit/common.hpp"
#include "lowreskit/records.hpp"
#include "lowreskit/training_plan.hpp"

/// Answer-span augmentation for span-extraction QA ("fuzzy answer spans").
namespace lowreskit::qa {

struct Document {
  std::string doc_id;
  std::string text;  // UTF-8

  bool operator==(const Document&) const = default;
};

/// Half-open [start_char, end_char) in Unicode scalar values.
struct AnswerSpan {
  std::string doc_id;
  std::size_t start_char = 0;
  std::size_t end_char = 0;

  bool operator==(const AnswerSpan&) const = default;
};

struct QAExample {
  std::string example_id;
  std::string question_title;
  std::string question_body;
  std::vector<Document> documents;
  std::optional<AnswerSpan> answer;
  bool answerable = false;

  bool operator==(const QAExample&) const = default;

  /// Throws ValidationError if the answer/answerable invariants do not hold.
  void validate() const;
  const Document& answer_document() const;
  /// Answer text as a UTF-8 substring of the answer document.
  std::string answer_text() const;
};

enum class Provenance { original, augmented };

struct AugmentedExample {
  std::string parent_id;
  int shift_d = 0;
  AnswerSpan new_span;
  std::string text;  // document substring at new_span
  Provenance provenance = Provenance::augmented;

  bool operator==(const AugmentedExample&) const = default;
};

using AugmentRecord = std::variant<QAExample, AugmentedExample>;

/// How a shifted boundary lands. `word` extends it outward to the nearest
/// whitespace so spans never split a token.
enum class BoundarySnap { exact, word };

struct AugmentPolicy {
  /// Selection threshold. The same knob is called p elsewhere.
  double threshold_T = 0.8;
  int spans_per_example_n = 2;
  std::vector<int> shift_magnitudes{-32, -16, 16, 32};
  std::uint64_t rng_seed = 0;
  BoundarySnap snap = BoundarySnap::word;

  void validate() const;
};

/// Shift fully absorbed by a document edge: the span would not change.
class DegenerateShift : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The per-example uniform draw compared against threshold_T.
double selection_draw(std::string_view example_id, std::uint64_t seed);

std::vector<QAExample> sample_for_augmentation(const std::vector<QAExample>& examples, const AugmentPolicy& policy);

/// d < 0 extends the start leftward by |d|; d > 0 extends the end rightward.
/// Result is clamped to the document. Throws DegenerateShift when clamping
/// yields the original span.
AugmentedExample shift_span(const QAExample& example, int d, BoundarySnap snap = BoundarySnap::exact);

/// Originals first (input order, unanswerables included), then augmented
/// records grouped per sampled example in input order.
std::vector<AugmentRecord> augment_dataset(const std::vector<QAExample>& examples, const AugmentPolicy& policy);

/// Stage 1 "pretrain" on the augmented set (which already contains the
/// originals); stage 2 "finetune" from stage 1 weights on originals only.
TrainingPlan build_training_plan(const DatasetRef& augmented_set, const DatasetRef& original_set);

// Record formats -------------------------------------------------------------

QAExample example_from_json(const json& record);
json example_to_json(const QAExample& example);
/// Augmented records are full examples (parent question, new answer span) plus
/// provenance, parent_id and shift_d.
json augmented_to_json(const AugmentedExample& augmented, const QAExample& parent);

}  // namespace lowreskit::qa
