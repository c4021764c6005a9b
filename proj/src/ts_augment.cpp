#include "lowreskit/ts_augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "lowreskit/common.hpp"

namespace lowreskit::ts {

namespace {

const std::map<std::string, std::string>& default_synonyms() {
  static const std::map<std::string, std::string> table{
      {"approximately", "about"}, {"assist", "help"},       {"commence", "begin"},   {"consequently", "so"},
      {"demonstrate", "show"},    {"facilitate", "help"},   {"however", "but"},      {"individuals", "people"},
      {"obtain", "get"},          {"purchase", "buy"},      {"regarding", "about"},  {"require", "need"},
      {"subsequently", "later"},  {"succeeding", "after"},  {"sufficient", "enough"}, {"terminate", "end"},
      {"utilize", "use"},         {"numerous", "many"},     {"residence", "home"},   {"additional", "more"},
  };
  return table;
}

std::string role_to_string(Role r) {
  switch (r) {
    case Role::subject: return "subject";
    case Role::object: return "object";
    case Role::premise: return "premise";
    case Role::hypothesis: return "hypothesis";
    case Role::none: return "none";
  }
  return "none";
}

Role role_from_string(const std::string& s) {
  if (s == "subject") return Role::subject;
  if (s == "object") return Role::object;
  if (s == "premise") return Role::premise;
  if (s == "hypothesis") return Role::hypothesis;
  if (s == "none") return Role::none;
  throw ValidationError("unknown critical span role '" + s + "'");
}

}  // namespace

ReferenceSimplifier::ReferenceSimplifier() : synonyms_(default_synonyms()) {}

ReferenceSimplifier::ReferenceSimplifier(std::map<std::string, std::string> synonyms)
    : synonyms_(std::move(synonyms)) {}

std::string ReferenceSimplifier::simplify(const std::string& text) {
  std::vector<std::string> out;
  for (auto tok : split_ws(text)) {
    // Keep trailing punctuation attached to the replacement.
    std::string core = tok;
    std::string tail;
    while (!core.empty() && std::string_view(".,;:!?").find(core.back()) != std::string_view::npos) {
      tail.insert(tail.begin(), core.back());
      core.pop_back();
    }
    const std::string lower = to_lower(core);
    if (auto it = synonyms_.find(lower); it != synonyms_.end()) {
      std::string rep = it->second;
      if (!core.empty() && core[0] >= 'A' && core[0] <= 'Z' && !rep.empty() && rep[0] >= 'a' && rep[0] <= 'z') {
        rep[0] = static_cast<char>(rep[0] - 'a' + 'A');
      }
      core = rep;
    }
    // Clause split: a comma ends the sentence.
    if (!tail.empty() && tail[0] == ',') tail[0] = '.';
    out.push_back(core + tail);
  }
  return join(out);
}

std::string LookupSimplifier::simplify(const std::string& text) {
  auto it = table_.find(text);
  if (it == table_.end()) throw std::runtime_error("no precomputed simplification for input");
  return it->second;
}

CompositionKind composition_kind_from_string(std::string_view name) {
  if (name == "original") return CompositionKind::original;
  if (name == "simplified") return CompositionKind::simplified;
  if (name == "simplified_plus_complement" || name == "simplified+complement")
    return CompositionKind::simplified_plus_complement;
  if (name == "simplified_plus_original" || name == "simplified+original")
    return CompositionKind::simplified_plus_original;
  if (name == "swapped") return CompositionKind::swapped;
  throw ValidationError("unknown composition strategy '" + std::string(name) + "'");
}

std::string to_string(CompositionKind kind) {
  switch (kind) {
    case CompositionKind::original: return "original";
    case CompositionKind::simplified: return "simplified";
    case CompositionKind::simplified_plus_complement: return "simplified_plus_complement";
    case CompositionKind::simplified_plus_original: return "simplified_plus_original";
    case CompositionKind::swapped: return "swapped";
  }
  return "original";
}

double sample_draw(std::string_view example_id, std::uint64_t seed) {
  Rng rng(derive_seed(seed, example_id));
  return rng.uniform();
}

std::vector<TaggedExample> sample_and_simplify(const std::vector<TaggedExample>& examples, Simplifier& simplifier,
                                               double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("sampling probability p must lie in [0,1]");
  std::vector<TaggedExample> out;
  for (const auto& ex : examples) {
    if (!(sample_draw(ex.example_id, seed) < p)) continue;
    std::string simplified;
    try {
      simplified = simplifier.simplify(ex.text);
    } catch (const std::exception& e) {
      log_warning("simplifier " + simplifier.name() + " failed on " + ex.example_id + ": " + e.what());
      continue;
    }
    TaggedExample s = ex;
    s.example_id = ex.example_id + "#simp";
    s.text = std::move(simplified);
    s.provenance = Provenance::simplified;
    s.parent_id = ex.example_id;
    out.push_back(std::move(s));
  }
  return out;
}

bool preserves_critical_info(const TaggedExample& original, const std::string& simplified_text) {
  const std::string haystack = to_lower(normalize_ws(simplified_text));
  return std::all_of(original.critical_spans.begin(), original.critical_spans.end(), [&](const CriticalSpan& c) {
    return haystack.find(to_lower(normalize_ws(c.surface))) != std::string::npos;
  });
}

std::vector<TaggedExample> compose_training_set(const std::vector<TaggedExample>& originals,
                                                const std::vector<TaggedExample>& simplified,
                                                const CompositionStrategy& strategy) {
  if (!(strategy.sample_fraction_p >= 0.0 && strategy.sample_fraction_p <= 1.0)) {
    throw ValidationError("sample fraction p must lie in [0,1]");
  }
  std::unordered_map<std::string, const TaggedExample*> by_id;
  for (const auto& o : originals) by_id.emplace(o.example_id, &o);

  std::unordered_map<std::string, const TaggedExample*> simplification_of;
  for (const auto& s : simplified) {
    if (!by_id.count(s.parent_id)) {
      throw ValidationError("simplified record " + s.example_id + " has no original with id '" + s.parent_id + "'");
    }
    if (!simplification_of.emplace(s.parent_id, &s).second) {
      throw ValidationError("original " + s.parent_id + " has more than one simplification");
    }
  }
  auto preserving = [&](const TaggedExample& o) -> const TaggedExample* {
    auto it = simplification_of.find(o.example_id);
    if (it == simplification_of.end()) return nullptr;
    return preserves_critical_info(o, it->second->text) ? it->second : nullptr;
  };

  std::vector<TaggedExample> out;
  switch (strategy.kind) {
    case CompositionKind::original:
      out = originals;
      break;
    case CompositionKind::simplified:
      out = simplified;
      break;
    case CompositionKind::simplified_plus_complement:
      for (const auto& o : originals) {
        const auto* s = preserving(o);
        out.push_back(s ? *s : o);
      }
      break;
    case CompositionKind::simplified_plus_original:
      out = originals;
      for (const auto& o : originals) {
        if (const auto* s = preserving(o)) out.push_back(*s);
      }
      break;
    case CompositionKind::swapped:
      for (const auto& o : originals) {
        const auto* s = sample_draw(o.example_id, strategy.rng_seed) < strategy.sample_fraction_p ? preserving(o)
                                                                                                    : nullptr;
        out.push_back(s ? *s : o);
      }
      break;
  }
  return out;
}

double sentence_bleu(const std::string& hypothesis, const std::string& reference) {
  const auto hyp = split_ws(hypothesis);
  const auto ref = split_ws(reference);
  if (hyp.empty() || ref.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<std::string>(ref.begin() + static_cast<long>(i), ref.begin() + static_cast<long>(i + n))];
    }
    std::map<std::vector<std::string>, int> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<std::string>(hyp.begin() + static_cast<long>(i), hyp.begin() + static_cast<long>(i + n))];
    }
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [gram, c] : hyp_counts) {
      total += c;
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) matched += std::min(c, it->second);
    }
    if (n > 1) {
      matched += 1.0;
      total += 1.0;
    }
    if (matched == 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  const double hyp_len = static_cast<double>(hyp.size());
  const double ref_len = static_cast<double>(ref.size());
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return bp * std::exp(log_sum / 4.0);
}

MeanStd bleu_divergence(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw ValidationError("BLEU divergence needs at least one pair");
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [original, simplified] : pairs) scores.push_back(sentence_bleu(simplified, original));
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  return {mean, std::sqrt(var / n)};
}

TaggedExample tagged_from_json(const json& r) {
  TaggedExample ex;
  ex.example_id = require<std::string>(r, "example_id");
  ex.text = require<std::string>(r, "text");
  ex.label = optional_field<std::string>(r, "label", "");
  if (auto it = r.find("critical_spans"); it != r.end() && !it->is_null()) {
    for (const auto& c : *it) {
      ex.critical_spans.push_back(
          {role_from_string(optional_field<std::string>(c, "role", "none")), require<std::string>(c, "surface")});
    }
  }
  const auto prov = optional_field<std::string>(r, "provenance", "original");
  if (prov == "original") {
    ex.provenance = Provenance::original;
  } else if (prov == "simplified") {
    ex.provenance = Provenance::simplified;
  } else {
    throw ValidationError("unknown provenance '" + prov + "'");
  }
  ex.parent_id = optional_field<std::string>(r, "parent_id", "");
  if (ex.provenance == Provenance::original) {
    for (const auto& c : ex.critical_spans) {
      if (ex.text.find(c.surface) == std::string::npos) {
        throw ValidationError("example " + ex.example_id + ": critical span '" + c.surface + "' not in text");
      }
    }
  }
  return ex;
}

json tagged_to_json(const TaggedExample& ex) {
  json spans = json::array();
  for (const auto& c : ex.critical_spans) spans.push_back({{"role", role_to_string(c.role)}, {"surface", c.surface}});
  json r{{"example_id", ex.example_id},
         {"text", ex.text},
         {"critical_spans", spans},
         {"label", ex.label},
         {"provenance", ex.provenance == Provenance::original ? "original" : "simplified"}};
  if (!ex.parent_id.empty()) r["parent_id"] = ex.parent_id;
  return r;
}

}  // namespace lowreskit::ts
