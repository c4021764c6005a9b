#pragma once

#include "lowreskit/config.hpp"
#include "lowreskit/records.hpp"

/// File-to-file commands. Each takes an options object (keys listed per
/// command), reads its inputs, writes its outputs and returns a summary.
/// Missing required keys raise ValidationError; "seed" defaults to the config seed.
namespace lowreskit::pipelines {

/// in, out; plan_out?, threshold (0.8), spans_per_example (2), shifts ([-32,-16,16,32]),
/// snap ("word" | "exact")
json augment_qa(const json& opts, const Config& cfg);

/// in (span scores), out; k (5)
json rerank(const json& opts, const Config& cfg);

/// in (ranked results), gold (QA examples or {question_id, doc_id}); at ([1, 5]), out?
json eval_dra(const json& opts, const Config& cfg);

/// in (tagged examples), out; p (0.5), simplifier ("reference" | "identity" | lookup table path),
/// composition ("simplified_plus_original")
json augment_ts(const json& opts, const Config& cfg);

/// in (pairs with both predictions), out; excluded_out?, model_out?
json gate_train_data(const json& opts, const Config& cfg);

/// in ({id, original_text, simplified_text}), out; gate ("good" | "bad" | model path)
json gate_apply(const json& opts, const Config& cfg);

/// in (aligned pairs), dictionary, out; remainder_out?, split_dir?,
/// similarity_threshold / min_sentence_terms / min_title_terms (config)
json build_med_corpus(const json& opts, const Config& cfg);

/// in (aligned pairs), out; context_mode (config)
json gen_tasks(const json& opts, const Config& cfg);

/// tasks, out; top_n (5), backends (all configured), context_mode (config)
json predict(const json& opts, const Config& cfg);

/// tasks, predictions, out; strategy ("autometsl"), selector ("trained" | "oracle"),
/// train_tasks?, train_predictions?, selector_out?, pooled (false)
json ensemble_eval(const json& opts, const Config& cfg);

/// kind ("autocomplete" | "span" | "text").
/// autocomplete: tasks, predictions (decisions or a ranked prediction log); at ([1]), breakdown?, backend?
/// span: predictions, gold ({id, start, end}). text: predictions, gold ({id, text}).
/// out? receives MetricReport records.
json evaluate(const json& opts, const Config& cfg);

}  // namespace lowreskit::pipelines
