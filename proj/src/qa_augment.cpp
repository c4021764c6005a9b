#include "lowreskit/qa_augment.hpp"

#include <algorithm>
#include <set>

namespace lowreskit::qa {

void QAExample::validate() const {
  if (!answerable) {
    if (answer) throw ValidationError("example " + example_id + ": unanswerable example carries an answer");
    return;
  }
  if (!answer) throw ValidationError("example " + example_id + ": answerable example has no answer");
  const auto& doc = answer_document();
  const std::size_t len = decode_utf8(doc.text).size();
  if (!(answer->start_char < answer->end_char && answer->end_char <= len)) {
    throw ValidationError("example " + example_id + ": answer span [" + std::to_string(answer->start_char) + "," +
                          std::to_string(answer->end_char) + ") outside document of length " +
                          std::to_string(len));
  }
}

const Document& QAExample::answer_document() const {
  if (!answer) throw ValidationError("example " + example_id + " has no answer");
  auto it = std::find_if(documents.begin(), documents.end(),
                         [&](const Document& d) { return d.doc_id == answer->doc_id; });
  if (it == documents.end()) {
    throw ValidationError("example " + example_id + ": answer doc_id '" + answer->doc_id + "' not among documents");
  }
  return *it;
}

std::string QAExample::answer_text() const {
  const auto text = decode_utf8(answer_document().text);
  return encode_utf8(std::u32string_view(text).substr(answer->start_char, answer->end_char - answer->start_char));
}

void AugmentPolicy::validate() const {
  if (!(threshold_T >= 0.0 && threshold_T <= 1.0)) throw ValidationError("threshold T must lie in [0,1]");
  if (spans_per_example_n < 1) throw ValidationError("spans per example must be >= 1");
  for (int d : shift_magnitudes) {
    if (d == 0) throw ValidationError("shift magnitude 0 is not an augmentation");
  }
}

double selection_draw(std::string_view example_id, std::uint64_t seed) {
  Rng rng(derive_seed(seed, example_id));
  return rng.uniform();
}

std::vector<QAExample> sample_for_augmentation(const std::vector<QAExample>& examples, const AugmentPolicy& policy) {
  policy.validate();
  std::vector<QAExample> selected;
  for (const auto& ex : examples) {
    if (!ex.answerable) {
      throw ValidationError("example " + ex.example_id + " is unanswerable; there is no span to shift");
    }
    if (selection_draw(ex.example_id, policy.rng_seed) < policy.threshold_T) selected.push_back(ex);
  }
  return selected;
}

namespace {

bool is_word_start(const std::u32string& t, std::size_t p) {
  return p == 0 || p >= t.size() || (is_space(t[p - 1]) && !is_space(t[p]));
}

bool is_word_end(const std::u32string& t, std::size_t e) {
  return e == 0 || e >= t.size() || (!is_space(t[e - 1]) && is_space(t[e]));
}

}  // namespace

AugmentedExample shift_span(const QAExample& example, int d, BoundarySnap snap) {
  example.validate();
  if (!example.answerable) {
    throw ValidationError("example " + example.example_id + " is unanswerable; there is no span to shift");
  }
  if (d == 0) throw ValidationError("shift d must be non-zero");

  const auto text = decode_utf8(example.answer_document().text);
  const auto len = static_cast<long long>(text.size());
  const auto& span = *example.answer;
  long long start = static_cast<long long>(span.start_char);
  long long end = static_cast<long long>(span.end_char);

  if (d < 0) {
    start = std::max(0LL, start + d);
    if (snap == BoundarySnap::word) {
      auto p = static_cast<std::size_t>(start);
      while (!is_word_start(text, p)) --p;
      start = static_cast<long long>(p);
    }
  } else {
    end = std::min(len, end + d);
    if (snap == BoundarySnap::word) {
      auto e = static_cast<std::size_t>(end);
      while (!is_word_end(text, e)) ++e;
      end = static_cast<long long>(e);
    }
  }

  AnswerSpan shifted{span.doc_id, static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
  if (shifted == span) {
    throw DegenerateShift("example " + example.example_id + ": shift " + std::to_string(d) +
                          " absorbed at document edge");
  }
  AugmentedExample out;
  out.parent_id = example.example_id;
  out.shift_d = d;
  out.new_span = shifted;
  out.text = encode_utf8(std::u32string_view(text).substr(shifted.start_char, shifted.end_char - shifted.start_char));
  return out;
}

std::vector<AugmentRecord> augment_dataset(const std::vector<QAExample>& examples, const AugmentPolicy& policy) {
  policy.validate();
  std::vector<AugmentRecord> out;
  out.reserve(examples.size());
  std::vector<QAExample> answerable;
  for (const auto& ex : examples) {
    ex.validate();
    out.emplace_back(ex);
    if (ex.answerable) answerable.push_back(ex);
  }

  // Distinct d values, first occurrence order.
  std::vector<int> shifts;
  for (int d : policy.shift_magnitudes) {
    if (std::find(shifts.begin(), shifts.end(), d) == shifts.end()) shifts.push_back(d);
  }

  for (const auto& ex : sample_for_augmentation(answerable, policy)) {
    std::set<std::pair<std::size_t, std::size_t>> emitted;
    int produced = 0;
    for (int d : shifts) {
      if (produced >= policy.spans_per_example_n) break;
      try {
        auto aug = shift_span(ex, d, policy.snap);
        // Word snapping can map two shifts onto one span.
        if (!emitted.insert({aug.new_span.start_char, aug.new_span.end_char}).second) continue;
        out.emplace_back(std::move(aug));
        ++produced;
      } catch (const DegenerateShift& e) {
        log_warning(std::string("skipping augmentation: ") + e.what());
      }
    }
  }
  return out;
}

TrainingPlan build_training_plan(const DatasetRef& augmented_set, const DatasetRef& original_set) {
  if (augmented_set.size == 0 || original_set.size == 0) {
    throw ValidationError("training plan requires non-empty augmented and original sets");
  }
  TrainingPlan plan;
  plan.stages.push_back({"pretrain", {augmented_set}, ""});
  plan.stages.push_back({"finetune", {original_set}, "pretrain"});
  return plan;
}

QAExample example_from_json(const json& r) {
  QAExample ex;
  ex.example_id = require<std::string>(r, "example_id");
  ex.question_title = optional_field<std::string>(r, "question_title", "");
  ex.question_body = optional_field<std::string>(r, "question_body", "");
  for (const auto& d : require<json>(r, "documents")) {
    ex.documents.push_back({require<std::string>(d, "doc_id"), require<std::string>(d, "text")});
  }
  ex.answerable = require<bool>(r, "answerable");
  if (auto it = r.find("answer"); it != r.end() && !it->is_null()) {
    ex.answer = AnswerSpan{require<std::string>(*it, "doc_id"), require<std::size_t>(*it, "start_char"),
                           require<std::size_t>(*it, "end_char")};
  }
  ex.validate();
  return ex;
}

json example_to_json(const QAExample& ex) {
  json r;
  r["example_id"] = ex.example_id;
  r["question_title"] = ex.question_title;
  r["question_body"] = ex.question_body;
  r["documents"] = json::array();
  for (const auto& d : ex.documents) r["documents"].push_back({{"doc_id", d.doc_id}, {"text", d.text}});
  r["answerable"] = ex.answerable;
  if (ex.answer) {
    r["answer"] = {{"doc_id", ex.answer->doc_id},
                   {"start_char", ex.answer->start_char},
                   {"end_char", ex.answer->end_char}};
  } else {
    r["answer"] = nullptr;
  }
  r["provenance"] = "original";
  return r;
}

json augmented_to_json(const AugmentedExample& aug, const QAExample& parent) {
  json r = example_to_json(parent);
  r["example_id"] = parent.example_id + "#d" + std::to_string(aug.shift_d);
  r["answer"] = {{"doc_id", aug.new_span.doc_id},
                 {"start_char", aug.new_span.start_char},
                 {"end_char", aug.new_span.end_char}};
  r["answer_text"] = aug.text;
  r["provenance"] = "augmented";
  r["parent_id"] = aug.parent_id;
  r["shift_d"] = aug.shift_d;
  return r;
}

}  // namespace lowreskit::qa
