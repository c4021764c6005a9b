#include "lowreskit/autocomplete.hpp"

#include "lowreskit/common.hpp"

namespace lowreskit::autocomplete {

ContextMode context_mode_from_string(std::string_view name) {
  if (name == "no_context" || name == "no-context") return ContextMode::no_context;
  if (name == "context_aware" || name == "context-aware") return ContextMode::context_aware;
  throw ValidationError("unknown context mode '" + std::string(name) + "'");
}

std::string to_string(ContextMode mode) {
  return mode == ContextMode::no_context ? "no_context" : "context_aware";
}

std::vector<PredictionTask> generate_tasks(const med::AlignedPair& pair, const Tokenizer& tokenizer) {
  const auto simple = tokenizer(pair.simple_text);
  const auto difficult = tokenizer(pair.difficult_text);
  std::vector<PredictionTask> tasks;
  for (std::size_t i = 1; i < simple.size(); ++i) {
    PredictionTask t;
    t.task_id = (pair.pair_id.empty() ? std::string("pair") : pair.pair_id) + ":" + std::to_string(i);
    t.difficult_tokens = difficult;
    t.typed_prefix.assign(simple.begin(), simple.begin() + static_cast<std::ptrdiff_t>(i));
    t.gold_next = simple[i];
    t.position = i;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<std::string> build_model_input(const std::vector<std::string>& difficult_tokens,
                                           const std::vector<std::string>& typed_prefix, ContextMode mode) {
  std::vector<std::string> input;
  if (mode == ContextMode::context_aware) {
    if (difficult_tokens.empty()) throw ValidationError("context-aware input requires a difficult sentence");
    input = difficult_tokens;
    input.emplace_back(backends::kSep);
  }
  input.insert(input.end(), typed_prefix.begin(), typed_prefix.end());
  input.emplace_back(backends::kMask);
  return input;
}

std::vector<std::string> build_model_input(const PredictionTask& task, ContextMode mode) {
  return build_model_input(task.difficult_tokens, task.typed_prefix, mode);
}

LoopResult autocomplete_loop(const std::vector<std::string>& difficult_tokens, const std::string& first_word,
                             backends::Backend& backend, const Acceptor& acceptor, const LoopOptions& options) {
  if (first_word.empty()) throw ValidationError("the loop starts from a typed first word");
  LoopResult result;
  result.sentence.push_back(first_word);
  while (result.sentence.size() < options.max_tokens) {
    LoopStep step;
    step.prefix = result.sentence;
    try {
      step.suggestions = backend.predict_next(build_model_input(difficult_tokens, result.sentence, options.mode),
                                              options.top_n);
    } catch (const std::exception& e) {
      result.error = backend.id() + ": " + e.what();
      return result;
    }
    // The committed token, not the suggestion, extends the prefix.
    step.accepted = acceptor(result.sentence, step.suggestions);
    result.transcript.push_back(step);
    if (step.accepted == backends::kEnd) {
      result.finished = true;
      return result;
    }
    result.sentence.push_back(step.accepted);
  }
  return result;
}

json task_to_json(const PredictionTask& task, ContextMode mode) {
  return {{"task_id", task.task_id},
          {"difficult", join(task.difficult_tokens)},
          {"prefix", join(task.typed_prefix)},
          {"gold", task.gold_next},
          {"position", task.position},
          {"context_mode", to_string(mode)},
          {"input", join(build_model_input(task, mode))}};
}

PredictionTask task_from_json(const json& r) {
  PredictionTask t;
  t.task_id = require<std::string>(r, "task_id");
  t.difficult_tokens = split_ws(optional_field<std::string>(r, "difficult", ""));
  t.typed_prefix = split_ws(require<std::string>(r, "prefix"));
  t.gold_next = require<std::string>(r, "gold");
  t.position = optional_field<std::size_t>(r, "position", t.typed_prefix.size());
  if (t.position < 1 || t.position != t.typed_prefix.size()) {
    throw ValidationError("task " + t.task_id + ": position must equal the prefix length and be >= 1");
  }
  if (split_ws(t.gold_next).size() != 1) throw ValidationError("task " + t.task_id + ": gold must be one token");
  return t;
}

}  // namespace lowreskit::autocomplete
