#include "lowreskit/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "lowreskit/common.hpp"

namespace lowreskit {

void NaiveBayesClassifier::train(const std::vector<Example>& examples) {
  for (const auto& ex : examples) {
    if (ex.label.empty()) throw ValidationError("classifier training example without a label");
    auto [it, inserted] = stats_.try_emplace(ex.label);
    if (inserted) labels_.push_back(ex.label);
    auto& s = it->second;
    ++s.docs;
    ++total_docs_;
    for (const auto& f : ex.features) {
      ++s.feature_counts[f];
      ++s.feature_total;
      ++vocabulary_[f];
    }
  }
}

std::vector<std::pair<std::string, double>> NaiveBayesClassifier::log_posteriors(
    const std::vector<std::string>& features) const {
  if (!trained()) throw ValidationError("classifier has not been trained");
  const double v = static_cast<double>(vocabulary_.size()) + 1.0;  // +1 for unseen features
  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(labels_.size());
  for (const auto& label : labels_) {
    const auto& s = stats_.at(label);
    double lp = std::log(static_cast<double>(s.docs) / static_cast<double>(total_docs_));
    const double denom = static_cast<double>(s.feature_total) + v;
    for (const auto& f : features) {
      auto it = s.feature_counts.find(f);
      const double c = it == s.feature_counts.end() ? 0.0 : static_cast<double>(it->second);
      lp += std::log((c + 1.0) / denom);
    }
    scores.emplace_back(label, lp);
  }
  return scores;
}

std::string NaiveBayesClassifier::predict(const std::vector<std::string>& features) const {
  const auto scores = log_posteriors(features);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].second > scores[best].second) best = i;
  }
  return scores[best].first;
}

double NaiveBayesClassifier::probability(const std::vector<std::string>& features, const std::string& label) const {
  const auto scores = log_posteriors(features);
  double max_lp = -INFINITY;
  for (const auto& [_, lp] : scores) max_lp = std::max(max_lp, lp);
  double z = 0.0;
  double target = 0.0;
  for (const auto& [l, lp] : scores) {
    const double w = std::exp(lp - max_lp);
    z += w;
    if (l == label) target = w;
  }
  return target / z;
}

json NaiveBayesClassifier::to_json() const {
  json labels = json::array();
  for (const auto& label : labels_) {
    const auto& s = stats_.at(label);
    labels.push_back({{"label", label}, {"docs", s.docs}, {"features", s.feature_counts}});
  }
  return {{"kind", "naive_bayes"}, {"labels", labels}};
}

NaiveBayesClassifier NaiveBayesClassifier::from_json(const json& j) {
  NaiveBayesClassifier c;
  for (const auto& entry : require<json>(j, "labels")) {
    const auto label = require<std::string>(entry, "label");
    auto& s = c.stats_[label];
    c.labels_.push_back(label);
    s.docs = require<std::size_t>(entry, "docs");
    c.total_docs_ += s.docs;
    s.feature_counts = require<std::map<std::string, std::size_t>>(entry, "features");
    for (const auto& [f, n] : s.feature_counts) {
      s.feature_total += n;
      c.vocabulary_[f] += n;
    }
  }
  return c;
}

}  // namespace lowreskit
