#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lowreskit/classifier.hpp"
#include "lowreskit/records.hpp"

/// Inference-time quality gate choosing between an original input and its
/// simplification.
namespace lowreskit::gate {

enum class GateLabel { good, bad, excluded };

std::string to_string(GateLabel label);
GateLabel gate_label_from_string(std::string_view name);

/// A pair after the downstream model has been run on both variants.
struct GatePair {
  std::string id;
  std::string original_text;
  std::string simplified_text;
  std::optional<std::string> pred_on_original;
  std::optional<std::string> pred_on_simplified;
  std::string gold_label;
};

struct GateExample {
  std::string id;
  std::string original_text;
  std::string simplified_text;
  std::string pred_on_original;
  std::string pred_on_simplified;
  std::string gold_label;
  GateLabel gate_label = GateLabel::excluded;
};

struct GateDataset {
  std::vector<GateExample> training;  // good and bad only
  std::vector<GateExample> excluded;  // both variants wrong
  std::vector<std::string> rejected;  // diagnostics for records missing a prediction
};

/// good iff the prediction on the simplified text is correct; bad iff only the
/// original is correct; excluded iff both are wrong.
GateLabel label_pair(const std::string& pred_on_original, const std::string& pred_on_simplified,
                     const std::string& gold);

GateDataset build_gate_dataset(const std::vector<GatePair>& pairs);

/// Classifier input: original, separator sentinel, simplified.
inline constexpr std::string_view kGateSeparator = "[SEP]";
std::string gate_input(const std::string& original_text, const std::string& simplified_text);

class GateClassifier {
 public:
  virtual ~GateClassifier() = default;
  /// Returns good or bad. May throw.
  virtual GateLabel classify(const std::string& original_text, const std::string& simplified_text) = 0;
};

class ConstantGate : public GateClassifier {
 public:
  explicit ConstantGate(GateLabel label) : label_(label) {}
  GateLabel classify(const std::string&, const std::string&) override { return label_; }

 private:
  GateLabel label_;
};

/// Naive Bayes over side-tagged tokens of the gate input.
class NaiveBayesGate : public GateClassifier {
 public:
  NaiveBayesGate() = default;
  explicit NaiveBayesGate(NaiveBayesClassifier model) : model_(std::move(model)) {}

  static NaiveBayesGate train(const std::vector<GateExample>& training);
  static std::vector<std::string> features(const std::string& original_text, const std::string& simplified_text);

  GateLabel classify(const std::string& original_text, const std::string& simplified_text) override;
  const NaiveBayesClassifier& model() const { return model_; }

 private:
  NaiveBayesClassifier model_;
};

/// Returns simplified_text iff the gate says good; original_text otherwise,
/// including when the classifier fails.
const std::string& gate_select(const std::string& original_text, const std::string& simplified_text,
                               GateClassifier& gate);

GatePair pair_from_json(const json& record);
json gate_example_to_json(const GateExample& example);
GateExample gate_example_from_json(const json& record);

}  // namespace lowreskit::gate
