#include "lowreskit/ensemble.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace lowreskit::ensemble {

using backends::SuggestionList;

void EnsembleWeights::validate() const {
  if (alpha < 0 || theta < 0 || beta < 0 || sigma < 0 || label_bonus < 0) {
    throw ValidationError("ensemble weights must be non-negative");
  }
  if (pool_top_n < 1) throw ValidationError("majority-vote pool size must be >= 1");
}

double score_4cc(const Candidate& c, const std::string& selected_backend, const EnsembleWeights& w) {
  return w.alpha * c.probability + w.theta * (c.backend_id == selected_backend ? 1.0 : 0.0);
}

double score_autometsl(const Candidate& c, const std::set<std::string>& label_set, const EnsembleWeights& w) {
  return w.beta * c.probability + w.sigma * (label_set.count(c.backend_id) ? w.label_bonus : 0.0);
}

namespace {

std::vector<Candidate> collect(const std::vector<SuggestionList>& records, std::size_t per_backend) {
  std::vector<Candidate> out;
  for (std::size_t b = 0; b < records.size(); ++b) {
    const auto& items = records[b].items;
    const std::size_t n = std::min(per_backend, items.size());
    for (std::size_t i = 0; i < n; ++i) out.push_back({items[i].word, records[b].model_id, items[i].probability, b});
  }
  return out;
}

}  // namespace

Selection select_best(const std::vector<SuggestionList>& records, const Scorer& scorer, bool pooled,
                      std::size_t pool_top_n) {
  if (records.empty()) throw ValidationError("select_best needs at least one record");
  const auto candidates = collect(records, pooled ? pool_top_n : 1);
  if (candidates.empty()) throw ValidationError("select_best: every suggestion list is empty");
  std::optional<Selection> best;
  for (const auto& c : candidates) {
    const double s = scorer(c);
    // Strict comparison keeps the earliest backend on ties.
    if (!best || s > best->score) best = Selection{c.word, c.backend_id, s};
  }
  return *best;
}

std::vector<Selection> rank_by_score(const std::vector<SuggestionList>& records, const Scorer& scorer,
                                     std::size_t pool_top_n) {
  std::vector<Selection> scored;
  for (const auto& c : collect(records, pool_top_n)) scored.push_back({c.word, c.backend_id, scorer(c)});
  std::stable_sort(scored.begin(), scored.end(), [](const Selection& a, const Selection& b) { return a.score > b.score; });
  std::vector<Selection> out;
  std::set<std::string> seen;
  for (auto& s : scored) {
    if (seen.insert(s.word).second) out.push_back(std::move(s));
  }
  return out;
}

std::vector<VoteCount> rank_by_votes(const std::vector<SuggestionList>& records, std::size_t pool_top_n, Rng& rng) {
  if (records.empty()) throw ValidationError("majority vote needs at least one record");
  std::map<std::string, std::size_t> counts;
  for (const auto& c : collect(records, pool_top_n)) ++counts[c.word];
  if (counts.empty()) throw ValidationError("majority vote: every suggestion list is empty");

  std::map<std::size_t, std::vector<std::string>, std::greater<>> by_count;
  for (const auto& [word, n] : counts) by_count[n].push_back(word);  // lexicographic within a group
  std::vector<VoteCount> out;
  for (auto& [n, words] : by_count) {
    if (words.size() > 1) rng.shuffle(words);
    for (auto& w : words) out.push_back({std::move(w), n});
  }
  return out;
}

std::string majority_vote(const std::vector<SuggestionList>& records, Rng& rng, std::size_t pool_top_n) {
  // A uniform shuffle of the tied group makes its head a uniform choice.
  return rank_by_votes(records, pool_top_n, rng).front().word;
}

std::vector<SelectorLabel> build_selector_dataset(const std::vector<std::string>& task_ids,
                                                  const std::vector<std::vector<bool>>& correctness, SelectorMode mode,
                                                  std::uint64_t seed) {
  if (task_ids.size() != correctness.size()) throw ValidationError("task ids and correctness rows differ in length");
  std::vector<SelectorLabel> out;
  for (std::size_t t = 0; t < task_ids.size(); ++t) {
    const auto& row = correctness[t];
    if (mode == SelectorMode::multilabel) {
      out.push_back({task_ids[t], row, std::nullopt});
      continue;
    }
    std::vector<std::size_t> correct;
    for (std::size_t b = 0; b < row.size(); ++b) {
      if (row[b]) correct.push_back(b);
    }
    if (correct.empty()) continue;
    Rng rng(derive_seed(seed, task_ids[t]));
    out.push_back({task_ids[t], row, correct[rng.below(correct.size())]});
  }
  return out;
}

double upper_bound(const std::vector<std::vector<bool>>& correctness) {
  if (correctness.empty()) throw ValidationError("upper bound needs at least one task");
  std::size_t hits = 0;
  for (const auto& row : correctness) {
    if (std::any_of(row.begin(), row.end(), [](bool b) { return b; })) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(correctness.size());
}

std::string format_labels(const std::vector<bool>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ' ';
    out += labels[i] ? '1' : '0';
  }
  return out;
}

// Selectors -----------------------------------------------------------------

std::vector<std::string> selector_features(const autocomplete::PredictionTask& task) {
  std::vector<std::string> f;
  f.push_back("pos:" + std::to_string(std::min<std::size_t>(task.position, 10)));
  const auto dlen = task.difficult_tokens.size();
  f.push_back(std::string("dlen:") + (dlen <= 5 ? "vshort" : dlen <= 15 ? "short" : dlen <= 19 ? "medium" : "long"));
  if (!task.typed_prefix.empty()) {
    const auto last = to_lower(task.typed_prefix.back());
    f.push_back("last:" + last);
    bool in_context = false;
    for (const auto& d : task.difficult_tokens) in_context = in_context || to_lower(d) == last;
    f.push_back(in_context ? "last_in_ctx" : "last_not_in_ctx");
  }
  return f;
}

NaiveBayesClassSelector::NaiveBayesClassSelector(std::vector<std::string> backend_ids, NaiveBayesClassifier model)
    : backend_ids_(std::move(backend_ids)), model_(std::move(model)) {}

namespace {

std::unordered_map<std::string, const autocomplete::PredictionTask*> index_tasks(
    const std::vector<autocomplete::PredictionTask>& tasks) {
  std::unordered_map<std::string, const autocomplete::PredictionTask*> idx;
  for (const auto& t : tasks) idx.emplace(t.task_id, &t);
  return idx;
}

}  // namespace

NaiveBayesClassSelector NaiveBayesClassSelector::train(const std::vector<autocomplete::PredictionTask>& tasks,
                                                       const std::vector<SelectorLabel>& labels,
                                                       const std::vector<std::string>& backend_ids) {
  const auto idx = index_tasks(tasks);
  std::vector<NaiveBayesClassifier::Example> data;
  for (const auto& l : labels) {
    if (!l.class_index) continue;
    auto it = idx.find(l.task_id);
    if (it == idx.end()) throw ValidationError("selector label for unknown task " + l.task_id);
    data.push_back({selector_features(*it->second), backend_ids.at(*l.class_index)});
  }
  NaiveBayesClassifier model;
  model.train(data);
  return NaiveBayesClassSelector(backend_ids, std::move(model));
}

std::optional<std::string> NaiveBayesClassSelector::predict(const autocomplete::PredictionTask& task) const {
  if (!model_.trained()) return std::nullopt;
  return model_.predict(selector_features(task));
}

json NaiveBayesClassSelector::to_json() const {
  return {{"kind", "4cc"}, {"backends", backend_ids_}, {"model", model_.to_json()}};
}

NaiveBayesClassSelector NaiveBayesClassSelector::from_json(const json& j) {
  return NaiveBayesClassSelector(require<std::vector<std::string>>(j, "backends"),
                                 NaiveBayesClassifier::from_json(require<json>(j, "model")));
}

NaiveBayesLabelSetSelector::NaiveBayesLabelSetSelector(std::vector<std::string> backend_ids,
                                                       std::vector<NaiveBayesClassifier> models)
    : backend_ids_(std::move(backend_ids)), models_(std::move(models)) {
  if (backend_ids_.size() != models_.size()) throw ValidationError("one selector model per backend required");
}

NaiveBayesLabelSetSelector NaiveBayesLabelSetSelector::train(const std::vector<autocomplete::PredictionTask>& tasks,
                                                             const std::vector<SelectorLabel>& labels,
                                                             const std::vector<std::string>& backend_ids) {
  const auto idx = index_tasks(tasks);
  std::vector<std::vector<NaiveBayesClassifier::Example>> data(backend_ids.size());
  for (const auto& l : labels) {
    if (l.labels.size() != backend_ids.size()) {
      throw ValidationError("label vector length differs from backend count for task " + l.task_id);
    }
    auto it = idx.find(l.task_id);
    if (it == idx.end()) throw ValidationError("selector label for unknown task " + l.task_id);
    const auto f = selector_features(*it->second);
    for (std::size_t b = 0; b < backend_ids.size(); ++b) data[b].push_back({f, l.labels[b] ? "1" : "0"});
  }
  std::vector<NaiveBayesClassifier> models(backend_ids.size());
  for (std::size_t b = 0; b < backend_ids.size(); ++b) models[b].train(data[b]);
  return NaiveBayesLabelSetSelector(backend_ids, std::move(models));
}

std::set<std::string> NaiveBayesLabelSetSelector::predict(const autocomplete::PredictionTask& task) const {
  std::set<std::string> out;
  const auto f = selector_features(task);
  for (std::size_t b = 0; b < backend_ids_.size(); ++b) {
    if (models_[b].trained() && models_[b].probability(f, "1") > 0.5) out.insert(backend_ids_[b]);
  }
  return out;
}

json NaiveBayesLabelSetSelector::to_json() const {
  json models = json::array();
  for (const auto& m : models_) models.push_back(m.to_json());
  return {{"kind", "multilabel"}, {"backends", backend_ids_}, {"models", models}};
}

NaiveBayesLabelSetSelector NaiveBayesLabelSetSelector::from_json(const json& j) {
  std::vector<NaiveBayesClassifier> models;
  for (const auto& m : require<json>(j, "models")) models.push_back(NaiveBayesClassifier::from_json(m));
  return NaiveBayesLabelSetSelector(require<std::vector<std::string>>(j, "backends"), std::move(models));
}

// Prediction-log evaluation --------------------------------------------------

Strategy strategy_from_string(std::string_view name) {
  if (name == "majority") return Strategy::majority;
  if (name == "4cc") return Strategy::four_cc;
  if (name == "autometsl") return Strategy::autometsl;
  if (name == "upper-bound" || name == "upper_bound") return Strategy::upper_bound;
  throw ValidationError("unknown ensemble strategy '" + std::string(name) + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::majority: return "majority";
    case Strategy::four_cc: return "4cc";
    case Strategy::autometsl: return "autometsl";
    case Strategy::upper_bound: return "upper-bound";
  }
  return "majority";
}

std::vector<TaskLog> assemble_logs(const std::vector<autocomplete::PredictionTask>& tasks,
                                   const std::vector<backends::PredictionRecord>& predictions,
                                   std::vector<std::string> backend_order) {
  if (backend_order.empty()) {
    for (const auto& p : predictions) {
      if (std::find(backend_order.begin(), backend_order.end(), p.backend_id) == backend_order.end()) {
        backend_order.push_back(p.backend_id);
      }
    }
  }
  std::unordered_map<std::string, std::size_t> backend_pos;
  for (std::size_t i = 0; i < backend_order.size(); ++i) backend_pos.emplace(backend_order[i], i);

  std::vector<TaskLog> logs;
  std::unordered_map<std::string, std::size_t> task_pos;
  for (const auto& t : tasks) {
    if (!task_pos.emplace(t.task_id, logs.size()).second) throw ValidationError("duplicate task id " + t.task_id);
    TaskLog log{t, {}};
    for (const auto& b : backend_order) log.records.push_back({b, {}});
    logs.push_back(std::move(log));
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, backends::Suggestion>>> ranked;
  for (const auto& p : predictions) {
    auto t = task_pos.find(p.task_id);
    if (t == task_pos.end()) throw ValidationError("prediction for unknown task " + p.task_id);
    auto b = backend_pos.find(p.backend_id);
    if (b == backend_pos.end()) continue;  // backend not selected
    ranked[{t->second, b->second}].push_back({p.rank, {p.word, p.probability}});
  }
  for (auto& [key, items] : ranked) {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& list = logs[key.first].records[key.second].items;
    for (auto& [rank, s] : items) list.push_back(std::move(s));
  }
  return logs;
}

std::vector<std::string> log_backend_ids(const std::vector<TaskLog>& logs) {
  std::vector<std::string> ids;
  if (!logs.empty()) {
    for (const auto& r : logs.front().records) ids.push_back(r.model_id);
  }
  return ids;
}

std::vector<std::vector<bool>> top1_correctness(const std::vector<TaskLog>& logs) {
  std::vector<std::vector<bool>> out;
  out.reserve(logs.size());
  for (const auto& log : logs) {
    auto& row = out.emplace_back();
    for (const auto& r : log.records) row.push_back(!r.items.empty() && r.items.front().word == log.task.gold_next);
  }
  return out;
}

std::vector<Decision> run_strategy(const std::vector<TaskLog>& logs, Strategy strategy, const StrategyInputs& in) {
  in.weights.validate();
  if (strategy == Strategy::four_cc && !in.class_selector) throw ValidationError("4CC needs a class selector");
  if (strategy == Strategy::autometsl && !in.label_selector) throw ValidationError("AutoMeTS needs a label-set selector");

  std::vector<Decision> out;
  out.reserve(logs.size());
  for (const auto& log : logs) {
    Decision d{log.task.task_id, "", ""};
    switch (strategy) {
      case Strategy::majority: {
        Rng rng(derive_seed(in.seed, log.task.task_id));
        d.word = majority_vote(log.records, rng, in.weights.pool_top_n);
        break;
      }
      case Strategy::four_cc: {
        const auto selected = in.class_selector->predict(log.task).value_or("");
        const auto s = select_best(
            log.records, [&](const Candidate& c) { return score_4cc(c, selected, in.weights); }, in.pooled,
            in.weights.pool_top_n);
        d.word = s.word;
        d.backend_id = s.backend_id;
        break;
      }
      case Strategy::autometsl: {
        const auto ls = in.label_selector->predict(log.task);
        const auto s = select_best(
            log.records, [&](const Candidate& c) { return score_autometsl(c, ls, in.weights); }, in.pooled,
            in.weights.pool_top_n);
        d.word = s.word;
        d.backend_id = s.backend_id;
        break;
      }
      case Strategy::upper_bound: {
        const backends::SuggestionList* chosen = nullptr;
        for (const auto& r : log.records) {
          if (r.items.empty()) continue;
          if (!chosen) chosen = &r;
          if (r.items.front().word == log.task.gold_next) {
            chosen = &r;
            break;
          }
        }
        if (!chosen) throw ValidationError("task " + log.task.task_id + " has no predictions");
        d.word = chosen->items.front().word;
        d.backend_id = chosen->model_id;
        break;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

OracleClassSelector::OracleClassSelector(const std::vector<TaskLog>& logs) {
  const auto correct = top1_correctness(logs);
  for (std::size_t t = 0; t < logs.size(); ++t) {
    for (std::size_t b = 0; b < correct[t].size(); ++b) {
      if (correct[t][b]) {
        choice_.emplace(logs[t].task.task_id, logs[t].records[b].model_id);
        break;
      }
    }
  }
}

std::optional<std::string> OracleClassSelector::predict(const autocomplete::PredictionTask& task) const {
  auto it = choice_.find(task.task_id);
  if (it == choice_.end()) return std::nullopt;
  return it->second;
}

OracleLabelSetSelector::OracleLabelSetSelector(const std::vector<TaskLog>& logs) {
  const auto correct = top1_correctness(logs);
  for (std::size_t t = 0; t < logs.size(); ++t) {
    auto& s = sets_[logs[t].task.task_id];
    for (std::size_t b = 0; b < correct[t].size(); ++b) {
      if (correct[t][b]) s.insert(logs[t].records[b].model_id);
    }
  }
}

std::set<std::string> OracleLabelSetSelector::predict(const autocomplete::PredictionTask& task) const {
  auto it = sets_.find(task.task_id);
  return it == sets_.end() ? std::set<std::string>{} : it->second;
}

}  // namespace lowreskit::ensemble
