#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lowreskit/records.hpp"

namespace lowreskit {

/// Multinomial naive Bayes over string features with add-one smoothing.
/// Small, count-based and exactly reproducible; used as the desk-scale
/// classifier behind the simplification gate and the ensemble selectors.
class NaiveBayesClassifier {
 public:
  struct Example {
    std::vector<std::string> features;
    std::string label;
  };

  void train(const std::vector<Example>& examples);
  bool trained() const { return total_docs_ > 0; }

  /// Label scores as log posteriors, in label-first-seen order.
  std::vector<std::pair<std::string, double>> log_posteriors(const std::vector<std::string>& features) const;
  /// Argmax label; ties go to the label seen first in training.
  std::string predict(const std::vector<std::string>& features) const;
  /// Posterior probability of `label` (0 if the label was never seen).
  double probability(const std::vector<std::string>& features, const std::string& label) const;

  const std::vector<std::string>& labels() const { return labels_; }

  json to_json() const;
  static NaiveBayesClassifier from_json(const json& j);

 private:
  struct LabelStats {
    std::size_t docs = 0;
    std::size_t feature_total = 0;
    std::map<std::string, std::size_t> feature_counts;
  };
  std::vector<std::string> labels_;
  std::map<std::string, LabelStats> stats_;
  std::map<std::string, std::size_t> vocabulary_;
  std::size_t total_docs_ = 0;
};

}  // namespace lowreskit
