#include "lowreskit/simp_gate.hpp"

#include "lowreskit/common.hpp"

namespace lowreskit::gate {

std::string to_string(GateLabel label) {
  switch (label) {
    case GateLabel::good: return "good";
    case GateLabel::bad: return "bad";
    case GateLabel::excluded: return "excluded";
  }
  return "excluded";
}

GateLabel gate_label_from_string(std::string_view name) {
  if (name == "good") return GateLabel::good;
  if (name == "bad") return GateLabel::bad;
  if (name == "excluded") return GateLabel::excluded;
  throw ValidationError("unknown gate label '" + std::string(name) + "'");
}

GateLabel label_pair(const std::string& pred_on_original, const std::string& pred_on_simplified,
                     const std::string& gold) {
  if (pred_on_simplified == gold) return GateLabel::good;
  if (pred_on_original == gold) return GateLabel::bad;
  return GateLabel::excluded;
}

GateDataset build_gate_dataset(const std::vector<GatePair>& pairs) {
  GateDataset ds;
  for (const auto& p : pairs) {
    if (!p.pred_on_original || !p.pred_on_simplified) {
      ds.rejected.push_back(p.id + ": missing downstream prediction on " +
                            (!p.pred_on_original ? std::string("original") : std::string("simplified")) + " text");
      continue;
    }
    GateExample ex{p.id, p.original_text, p.simplified_text, *p.pred_on_original, *p.pred_on_simplified, p.gold_label,
                   label_pair(*p.pred_on_original, *p.pred_on_simplified, p.gold_label)};
    (ex.gate_label == GateLabel::excluded ? ds.excluded : ds.training).push_back(std::move(ex));
  }
  return ds;
}

std::string gate_input(const std::string& original_text, const std::string& simplified_text) {
  return original_text + " " + std::string(kGateSeparator) + " " + simplified_text;
}

std::vector<std::string> NaiveBayesGate::features(const std::string& original_text,
                                                  const std::string& simplified_text) {
  std::vector<std::string> feats;
  bool after_sep = false;
  for (const auto& tok : split_ws(gate_input(original_text, simplified_text))) {
    if (tok == kGateSeparator) {
      after_sep = true;
      continue;
    }
    feats.push_back((after_sep ? "s:" : "o:") + to_lower(tok));
  }
  const auto lo = split_ws(original_text).size();
  const auto ls = split_ws(simplified_text).size();
  const long diff = static_cast<long>(ls) - static_cast<long>(lo);
  feats.push_back("len_delta:" + std::to_string(diff < -5 ? -6 : diff > 5 ? 6 : diff));
  return feats;
}

NaiveBayesGate NaiveBayesGate::train(const std::vector<GateExample>& training) {
  std::vector<NaiveBayesClassifier::Example> data;
  for (const auto& ex : training) {
    if (ex.gate_label == GateLabel::excluded) continue;
    data.push_back({features(ex.original_text, ex.simplified_text), to_string(ex.gate_label)});
  }
  if (data.empty()) throw ValidationError("gate training set has no good/bad examples");
  NaiveBayesClassifier model;
  model.train(data);
  return NaiveBayesGate(std::move(model));
}

GateLabel NaiveBayesGate::classify(const std::string& original_text, const std::string& simplified_text) {
  return gate_label_from_string(model_.predict(features(original_text, simplified_text)));
}

const std::string& gate_select(const std::string& original_text, const std::string& simplified_text,
                               GateClassifier& gate) {
  try {
    return gate.classify(original_text, simplified_text) == GateLabel::good ? simplified_text : original_text;
  } catch (const std::exception& e) {
    log_warning(std::string("gate classifier failed, keeping original: ") + e.what());
    return original_text;
  }
}

namespace {
std::optional<std::string> optional_string(const json& r, const char* field) {
  auto it = r.find(field);
  if (it == r.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + field + "' has the wrong type");
  return it->get<std::string>();
}
}  // namespace

GatePair pair_from_json(const json& r) {
  return {require<std::string>(r, "id"),
          require<std::string>(r, "original_text"),
          require<std::string>(r, "simplified_text"),
          optional_string(r, "pred_original"),
          optional_string(r, "pred_simplified"),
          optional_field<std::string>(r, "gold", "")};
}

json gate_example_to_json(const GateExample& ex) {
  return {{"id", ex.id},
          {"original_text", ex.original_text},
          {"simplified_text", ex.simplified_text},
          {"pred_original", ex.pred_on_original},
          {"pred_simplified", ex.pred_on_simplified},
          {"gold", ex.gold_label},
          {"gate_label", to_string(ex.gate_label)}};
}

GateExample gate_example_from_json(const json& r) {
  return {require<std::string>(r, "id"),
          require<std::string>(r, "original_text"),
          require<std::string>(r, "simplified_text"),
          optional_field<std::string>(r, "pred_original", ""),
          optional_field<std::string>(r, "pred_simplified", ""),
          optional_field<std::string>(r, "gold", ""),
          gate_label_from_string(require<std::string>(r, "gate_label"))};
}

}  // namespace lowreskit::gate
