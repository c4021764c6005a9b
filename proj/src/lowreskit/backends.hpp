#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowreskit/records.hpp"
#include "lowreskit/training_plan.hpp"

/// Next-word prediction backends behind one interface.
namespace lowreskit::backends {

inline constexpr std::string_view kMask = "[MASK]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kEnd = "[END]";
inline constexpr std::string_view kStart = "<s>";

/// The backend cannot serve right now; ensembles may drop it and continue.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Suggestion {
  std::string word;
  double probability = 0.0;

  bool operator==(const Suggestion&) const = default;
};

/// Ranked suggestions: probabilities non-increasing, ties in lexicographic word order.
struct SuggestionList {
  std::string model_id;
  std::vector<Suggestion> items;

  bool operator==(const SuggestionList&) const = default;
};

struct Capabilities {
  bool bidirectional_mask = false;
  bool left_to_right = true;
};

/// Fine-tuning hyperparameters plus the stage schedule.
struct FineTunePlan {
  int batch_size = 8;
  int epochs = 8;
  double learning_rate = 5e-5;
  /// Stop at the N-th observed decrease in dev accuracy.
  int early_stop_decreases = 2;
  TrainingPlan stages;

  void validate() const;
};

/// Tracks dev accuracy per epoch and reports when training should stop.
class EarlyStopper {
 public:
  explicit EarlyStopper(int decreases_allowed = 2) : limit_(decreases_allowed) {}
  /// Returns true when this observation is the limit-th decrease.
  bool observe(double dev_accuracy);
  int decreases() const { return decreases_; }

 private:
  int limit_;
  int decreases_ = 0;
  bool has_last_ = false;
  double last_ = 0.0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual bool deterministic() const = 0;
  /// `input` must end with the mask sentinel. Throws BackendUnavailable when
  /// the backend cannot answer.
  virtual SuggestionList predict_next(const std::vector<std::string>& input, std::size_t top_n) = 0;
  /// Returns a new handle trained per `plan`; this handle is left unchanged.
  virtual std::unique_ptr<Backend> fine_tune(const FineTunePlan& plan) const = 0;
};

/// Interpolation weights of the reference model. Without a context segment the
/// context weight is dropped and the other two are renormalized.
struct ReferenceWeights {
  double bigram = 0.6;
  double unigram = 0.2;
  double context = 0.2;
};

/// Interpolated bigram/unigram count model with add-one smoothing, plus a
/// context-cache component over the tokens before the separator. Unseen
/// history tokens get a uniform distribution over the vocabulary.
class ReferenceBackend : public Backend {
 public:
  explicit ReferenceBackend(std::string id = "reference", ReferenceWeights weights = {});

  /// Add one whitespace-tokenized sentence (an end sentinel is appended).
  void observe(const std::vector<std::string>& sentence);
  void observe_text(std::string_view sentence);

  std::string id() const override { return id_; }
  Capabilities capabilities() const override { return {false, true}; }
  bool deterministic() const override { return true; }
  SuggestionList predict_next(const std::vector<std::string>& input, std::size_t top_n) override;
  std::unique_ptr<Backend> fine_tune(const FineTunePlan& plan) const override;

  std::uint64_t unigram_count(const std::string& word) const;
  std::uint64_t bigram_count(const std::string& history, const std::string& word) const;
  std::size_t vocabulary_size() const { return unigrams_.size(); }
  const ReferenceWeights& weights() const { return weights_; }

  bool operator==(const ReferenceBackend& other) const {
    return id_ == other.id_ && unigrams_ == other.unigrams_ && bigrams_ == other.bigrams_ && total_ == other.total_;
  }

 private:
  std::string id_;
  ReferenceWeights weights_;
  std::map<std::string, std::uint64_t> unigrams_;
  std::map<std::string, std::map<std::string, std::uint64_t>> bigrams_;
  std::map<std::string, std::uint64_t> history_totals_;
  std::uint64_t total_ = 0;
};

/// Sentences from a corpus file: NDJSON records with a "simple" field, or
/// plain text with one pre-tokenized sentence per line.
std::vector<std::string> load_sentences(const std::filesystem::path& path);

/// Out-of-process neural adapter. Request {backend_id, tokens, top_n};
/// response {suggestions: [{word, probability}]}.
class RemoteBackend : public Backend {
 public:
  RemoteBackend(std::string id, std::string base_url, Capabilities caps = {true, false}, double timeout_s = 10.0);

  std::string id() const override { return id_; }
  Capabilities capabilities() const override { return caps_; }
  bool deterministic() const override { return false; }
  SuggestionList predict_next(const std::vector<std::string>& input, std::size_t top_n) override;
  /// Posts the plan to the adapter's fine-tune endpoint; the adapter answers
  /// with the id of the tuned model.
  std::unique_ptr<Backend> fine_tune(const FineTunePlan& plan) const override;

 private:
  std::string id_;
  std::string base_url_;
  Capabilities caps_;
  double timeout_s_;
};

/// Immutable-after-startup set of backends in registry order, with per-handle
/// serialized dispatch.
class BackendRegistry {
 public:
  void add(std::unique_ptr<Backend> backend);
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> ids() const;
  bool contains(const std::string& id) const;
  Backend& get(const std::string& id);

  SuggestionList predict(const std::string& id, const std::vector<std::string>& input, std::size_t top_n);

 private:
  struct Entry {
    std::unique_ptr<Backend> backend;
    std::unique_ptr<std::mutex> lock;
  };
  std::vector<Entry> entries_;
};

/// Sorts by probability descending, ties by word, and truncates to top_n.
void rank_suggestions(std::vector<Suggestion>& items, std::size_t top_n);

// PredictionRecord log: one record per (task, backend, rank).
struct PredictionRecord {
  std::string task_id;
  std::string backend_id;
  std::size_t rank = 1;  // 1-based
  std::string word;
  double probability = 0.0;
};

std::vector<json> suggestion_records(const std::string& task_id, const SuggestionList& list);
PredictionRecord prediction_from_json(const json& record);

}  // namespace lowreskit::backends
