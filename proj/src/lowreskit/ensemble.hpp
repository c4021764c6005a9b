#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lowreskit/autocomplete.hpp"
#include "lowreskit/backends.hpp"
#include "lowreskit/classifier.hpp"
#include "lowreskit/common.hpp"

/// Combining per-backend next-word suggestions into one prediction.
namespace lowreskit::ensemble {

struct EnsembleWeights {
  double alpha = 0.5;  // 4CC confidence weight
  double theta = 0.5;  // 4CC selector-agreement weight
  double beta = 0.5;   // AutoMeTS confidence weight
  double sigma = 0.5;  // AutoMeTS label-set weight
  double label_bonus = 0.25;  // S(X, Ls) when X is in Ls
  std::size_t pool_top_n = 5;

  void validate() const;
};

/// One backend's proposed word.
struct Candidate {
  std::string word;
  std::string backend_id;
  double probability = 0.0;
  std::size_t backend_index = 0;  // registry position
};

/// alpha * P(w|X) + theta * [X == selected]
double score_4cc(const Candidate& c, const std::string& selected_backend, const EnsembleWeights& w);
/// beta * P(w|X) + sigma * (label_bonus if X in Ls else 0)
double score_autometsl(const Candidate& c, const std::set<std::string>& label_set, const EnsembleWeights& w);

using Scorer = std::function<double(const Candidate&)>;

struct Selection {
  std::string word;
  std::string backend_id;
  double score = 0.0;
};

/// Maximizes `scorer` over each backend's top suggestion (or, when pooled, over
/// each backend's first pool_top_n suggestions). Ties go to the earlier
/// backend in `records` order. Backends with empty lists are skipped.
Selection select_best(const std::vector<backends::SuggestionList>& records, const Scorer& scorer, bool pooled = false,
                      std::size_t pool_top_n = 5);

/// Every pooled candidate scored, best first, one entry per distinct word.
/// The head equals select_best.
std::vector<Selection> rank_by_score(const std::vector<backends::SuggestionList>& records, const Scorer& scorer,
                                     std::size_t pool_top_n);

struct VoteCount {
  std::string word;
  std::size_t count = 0;
};

/// Words of the pooled top-n lists by count, highest first; each tied group is
/// in seeded random order.
std::vector<VoteCount> rank_by_votes(const std::vector<backends::SuggestionList>& records, std::size_t pool_top_n,
                                     Rng& rng);

/// Most frequent word in the pooled top-n lists; ties broken uniformly at random.
std::string majority_vote(const std::vector<backends::SuggestionList>& records, Rng& rng, std::size_t pool_top_n = 5);

enum class SelectorMode { four_class, multilabel };

struct SelectorLabel {
  std::string task_id;
  std::vector<bool> labels;                 // multilabel: one bit per backend
  std::optional<std::size_t> class_index;  // 4CC: the chosen backend
};

/// correctness[t][b]: backend b's top prediction for task t is right.
/// 4CC: one class per task with at least one correct backend, chosen uniformly
/// among the correct ones; all-wrong tasks dropped. Multilabel: every task.
std::vector<SelectorLabel> build_selector_dataset(const std::vector<std::string>& task_ids,
                                                  const std::vector<std::vector<bool>>& correctness, SelectorMode mode,
                                                  std::uint64_t seed);

/// Fraction of tasks where at least one backend is correct.
double upper_bound(const std::vector<std::vector<bool>>& correctness);

/// "1 0 1 1"
std::string format_labels(const std::vector<bool>& labels);

// Selectors -----------------------------------------------------------------

/// Features the desk-scale selectors see: prefix length, last typed token,
/// difficult-sentence length, and whether the last token occurs in the context.
std::vector<std::string> selector_features(const autocomplete::PredictionTask& task);

/// Predicts which backend to trust (4CC).
class ClassSelector {
 public:
  virtual ~ClassSelector() = default;
  virtual std::optional<std::string> predict(const autocomplete::PredictionTask& task) const = 0;
};

/// Predicts the set of backends expected to be correct (AutoMeTS).
class LabelSetSelector {
 public:
  virtual ~LabelSetSelector() = default;
  virtual std::set<std::string> predict(const autocomplete::PredictionTask& task) const = 0;
};

class NaiveBayesClassSelector : public ClassSelector {
 public:
  NaiveBayesClassSelector(std::vector<std::string> backend_ids, NaiveBayesClassifier model);
  static NaiveBayesClassSelector train(const std::vector<autocomplete::PredictionTask>& tasks,
                                       const std::vector<SelectorLabel>& labels,
                                       const std::vector<std::string>& backend_ids);
  std::optional<std::string> predict(const autocomplete::PredictionTask& task) const override;
  json to_json() const;
  static NaiveBayesClassSelector from_json(const json& j);

 private:
  std::vector<std::string> backend_ids_;
  NaiveBayesClassifier model_;
};

/// One binary naive Bayes model per backend; a backend is in Ls when its
/// posterior of being correct exceeds 0.5.
class NaiveBayesLabelSetSelector : public LabelSetSelector {
 public:
  NaiveBayesLabelSetSelector(std::vector<std::string> backend_ids, std::vector<NaiveBayesClassifier> models);
  static NaiveBayesLabelSetSelector train(const std::vector<autocomplete::PredictionTask>& tasks,
                                          const std::vector<SelectorLabel>& labels,
                                          const std::vector<std::string>& backend_ids);
  std::set<std::string> predict(const autocomplete::PredictionTask& task) const override;
  json to_json() const;
  static NaiveBayesLabelSetSelector from_json(const json& j);

 private:
  std::vector<std::string> backend_ids_;
  std::vector<NaiveBayesClassifier> models_;
};

// Prediction-log evaluation --------------------------------------------------

enum class Strategy { majority, four_cc, autometsl, upper_bound };

Strategy strategy_from_string(std::string_view name);
std::string to_string(Strategy s);

/// All backends' suggestion lists for one task, in registry order.
struct TaskLog {
  autocomplete::PredictionTask task;
  std::vector<backends::SuggestionList> records;
};

/// Groups prediction records by task; backend order is first appearance in
/// the log unless `backend_order` is given. Tasks without records get empty lists.
std::vector<TaskLog> assemble_logs(const std::vector<autocomplete::PredictionTask>& tasks,
                                   const std::vector<backends::PredictionRecord>& predictions,
                                   std::vector<std::string> backend_order = {});

std::vector<std::string> log_backend_ids(const std::vector<TaskLog>& logs);

/// correctness[t][b] from each backend's top-1 word.
std::vector<std::vector<bool>> top1_correctness(const std::vector<TaskLog>& logs);

struct Decision {
  std::string task_id;
  std::string word;
  std::string backend_id;  // empty for majority vote
};

struct StrategyInputs {
  const ClassSelector* class_selector = nullptr;       // required for 4CC
  const LabelSetSelector* label_selector = nullptr;    // required for AutoMeTS
  EnsembleWeights weights;
  std::uint64_t seed = 0;
  bool pooled = false;
};

/// One decision per task. For upper_bound the decision is the first correct
/// backend's word, or the first backend's word when none is correct.
std::vector<Decision> run_strategy(const std::vector<TaskLog>& logs, Strategy strategy, const StrategyInputs& in);

/// Selectors that read the true correctness off the log (for analysis and tests).
class OracleClassSelector : public ClassSelector {
 public:
  explicit OracleClassSelector(const std::vector<TaskLog>& logs);
  std::optional<std::string> predict(const autocomplete::PredictionTask& task) const override;

 private:
  std::map<std::string, std::string> choice_;
};

class OracleLabelSetSelector : public LabelSetSelector {
 public:
  explicit OracleLabelSetSelector(const std::vector<TaskLog>& logs);
  std::set<std::string> predict(const autocomplete::PredictionTask& task) const override;

 private:
  std::map<std::string, std::set<std::string>> sets_;
};

}  // namespace lowreskit::ensemble
