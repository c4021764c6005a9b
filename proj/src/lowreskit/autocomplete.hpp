#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lowreskit/backends.hpp"
#include "lowreskit/med_corpus.hpp"
#include "lowreskit/records.hpp"

/// The autocomplete simplification task: per-word prediction tasks, model
/// inputs with or without the difficult sentence, and the suggestion loop.
namespace lowreskit::autocomplete {

/// Predict gold_next given the difficult sentence and the first
/// `position` tokens of the simple sentence.
struct PredictionTask {
  std::string task_id;
  std::vector<std::string> difficult_tokens;
  std::vector<std::string> typed_prefix;
  std::string gold_next;
  std::size_t position = 0;  // == typed_prefix.size(), >= 1

  bool operator==(const PredictionTask&) const = default;
};

enum class ContextMode { no_context, context_aware };

ContextMode context_mode_from_string(std::string_view name);
std::string to_string(ContextMode mode);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

/// n-1 tasks for an n-token simple sentence; empty when n < 2.
std::vector<PredictionTask> generate_tasks(const med::AlignedPair& pair, const Tokenizer& tokenizer = split_ws);

/// no_context: prefix [MASK]. context_aware: difficult [SEP] prefix [MASK].
std::vector<std::string> build_model_input(const PredictionTask& task, ContextMode mode);
std::vector<std::string> build_model_input(const std::vector<std::string>& difficult_tokens,
                                           const std::vector<std::string>& typed_prefix, ContextMode mode);

/// Returns the token the user (or a scripted oracle) commits next, given the
/// current prefix and the backend's suggestions. Returning the end sentinel
/// finishes the sentence.
using Acceptor = std::function<std::string(const std::vector<std::string>& prefix, const backends::SuggestionList&)>;

struct LoopOptions {
  ContextMode mode = ContextMode::context_aware;
  std::size_t top_n = 5;
  std::size_t max_tokens = 128;
};

struct LoopStep {
  std::vector<std::string> prefix;
  backends::SuggestionList suggestions;
  std::string accepted;
};

struct LoopResult {
  std::vector<std::string> sentence;
  std::vector<LoopStep> transcript;
  bool finished = false;          // the end sentinel was accepted
  std::optional<std::string> error;  // backend failure; sentence is partial
};

/// Starting from `first_word`, repeatedly ask the backend for the next word
/// and append whatever the acceptor commits until it commits the end
/// sentinel or max_tokens is reached.
LoopResult autocomplete_loop(const std::vector<std::string>& difficult_tokens, const std::string& first_word,
                             backends::Backend& backend, const Acceptor& acceptor, const LoopOptions& options = {});

json task_to_json(const PredictionTask& task, ContextMode mode);
PredictionTask task_from_json(const json& record);

}  // namespace lowreskit::autocomplete
