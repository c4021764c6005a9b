#include "lowreskit/pipelines.hpp"

#include <map>
#include <set>

#include "lowreskit/autocomplete.hpp"
#include "lowreskit/common.hpp"
#include "lowreskit/ensemble.hpp"
#include "lowreskit/eval.hpp"
#include "lowreskit/med_corpus.hpp"
#include "lowreskit/qa_augment.hpp"
#include "lowreskit/retrieval.hpp"
#include "lowreskit/simp_gate.hpp"
#include "lowreskit/ts_augment.hpp"

namespace lowreskit::pipelines {

namespace fs = std::filesystem;

namespace {

std::string path_opt(const json& opts, const char* key) {
  auto p = require<std::string>(opts, key);
  if (p.empty()) throw ValidationError(std::string("option '") + key + "' is empty");
  return p;
}

std::uint64_t seed_opt(const json& opts, const Config& cfg) {
  return optional_field<std::uint64_t>(opts, "seed", cfg.seed);
}

template <typename T, typename F>
std::vector<T> load_records(const fs::path& path, F parse) {
  std::vector<T> out;
  std::size_t line = 0;
  for (const auto& r : read_ndjson(path)) {
    ++line;
    try {
      out.push_back(parse(r));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::vector<autocomplete::PredictionTask> load_tasks(const fs::path& path) {
  return load_records<autocomplete::PredictionTask>(path, autocomplete::task_from_json);
}

std::vector<backends::PredictionRecord> load_predictions(const fs::path& path) {
  return load_records<backends::PredictionRecord>(path, backends::prediction_from_json);
}

autocomplete::ContextMode mode_opt(const json& opts, const Config& cfg) {
  if (auto it = opts.find("context_mode"); it != opts.end() && !it->is_null()) {
    return autocomplete::context_mode_from_string(it->get<std::string>());
  }
  return cfg.context_mode;
}

json reports_json(const std::vector<eval::MetricReport>& reports) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(eval::report_to_json(r));
  return a;
}

void maybe_write_reports(const json& opts, const std::vector<eval::MetricReport>& reports) {
  const auto out = optional_field<std::string>(opts, "out", "");
  if (out.empty()) return;
  std::vector<json> recs;
  for (const auto& r : reports) recs.push_back(eval::report_to_json(r));
  write_ndjson(out, recs);
}

}  // namespace

json augment_qa(const json& opts, const Config& cfg) {
  const auto in = path_opt(opts, "in");
  const auto out = path_opt(opts, "out");
  qa::AugmentPolicy policy;
  policy.threshold_T = optional_field<double>(opts, "threshold", policy.threshold_T);
  policy.spans_per_example_n = optional_field<int>(opts, "spans_per_example", policy.spans_per_example_n);
  policy.shift_magnitudes = optional_field<std::vector<int>>(opts, "shifts", policy.shift_magnitudes);
  const auto snap = optional_field<std::string>(opts, "snap", "word");
  if (snap == "word") {
    policy.snap = qa::BoundarySnap::word;
  } else if (snap == "exact") {
    policy.snap = qa::BoundarySnap::exact;
  } else {
    throw ValidationError("snap must be 'word' or 'exact'");
  }
  policy.rng_seed = seed_opt(opts, cfg);
  policy.validate();

  const auto examples = load_records<qa::QAExample>(in, qa::example_from_json);
  std::map<std::string, const qa::QAExample*> by_id;
  for (const auto& e : examples) by_id[e.example_id] = &e;

  std::vector<json> records;
  std::size_t originals = 0, augmented = 0;
  for (const auto& rec : qa::augment_dataset(examples, policy)) {
    if (const auto* ex = std::get_if<qa::QAExample>(&rec)) {
      records.push_back(qa::example_to_json(*ex));
      ++originals;
    } else {
      const auto& aug = std::get<qa::AugmentedExample>(rec);
      records.push_back(qa::augmented_to_json(aug, *by_id.at(aug.parent_id)));
      ++augmented;
    }
  }
  write_ndjson(out, records);

  json summary{{"originals", originals}, {"augmented", augmented}, {"out", out}};
  const auto plan_out = optional_field<std::string>(opts, "plan_out", "");
  if (!plan_out.empty()) {
    const auto plan = qa::build_training_plan({"augmented", out, records.size()}, {"original", in, originals});
    write_text_file(plan_out, plan.serialize());
    summary["plan"] = plan_out;
  }
  return summary;
}

json rerank(const json& opts, const Config&) {
  const auto in = path_opt(opts, "in");
  const auto out = path_opt(opts, "out");
  const auto k = optional_field<std::size_t>(opts, "k", 5);
  const auto spans = load_records<retrieval::SpanScore>(in, retrieval::span_from_json);
  std::vector<json> records;
  for (const auto& r : retrieval::rerank(spans, k)) records.push_back(retrieval::result_to_json(r));
  write_ndjson(out, records);
  return {{"questions", records.size()}, {"k", k}, {"out", out}};
}

json eval_dra(const json& opts, const Config&) {
  const auto results = load_records<retrieval::RetrievalResult>(path_opt(opts, "in"), retrieval::result_from_json);
  std::map<std::string, std::string> gold;
  for (const auto& r : read_ndjson(path_opt(opts, "gold"))) {
    if (r.contains("question_id") && r.contains("doc_id")) {
      gold[require<std::string>(r, "question_id")] = require<std::string>(r, "doc_id");
      continue;
    }
    const auto ex = qa::example_from_json(r);
    if (ex.answerable && ex.answer) gold[ex.example_id] = ex.answer->doc_id;
  }
  std::vector<eval::MetricReport> reports;
  json excluded = json::array();
  for (auto n : optional_field<std::vector<std::size_t>>(opts, "at", {1, 5})) {
    const auto rep = retrieval::dra_at(results, gold, n);
    reports.push_back({"DRA@" + std::to_string(n), rep.value, std::nullopt, rep.evaluated});
    excluded = rep.excluded;
  }
  maybe_write_reports(opts, reports);
  return {{"reports", reports_json(reports)}, {"excluded", excluded}};
}

json augment_ts(const json& opts, const Config& cfg) {
  const auto in = path_opt(opts, "in");
  const auto out = path_opt(opts, "out");
  const auto p = optional_field<double>(opts, "p", 0.5);
  const auto seed = seed_opt(opts, cfg);
  const auto simplifier_name = optional_field<std::string>(opts, "simplifier", "reference");

  std::unique_ptr<ts::Simplifier> simplifier;
  if (simplifier_name == "reference") {
    simplifier = std::make_unique<ts::ReferenceSimplifier>();
  } else if (simplifier_name == "identity") {
    simplifier = std::make_unique<ts::IdentitySimplifier>();
  } else {
    std::map<std::string, std::string> table;
    for (const auto& r : read_ndjson(simplifier_name)) {
      table[require<std::string>(r, "text")] = require<std::string>(r, "simplified");
    }
    simplifier = std::make_unique<ts::LookupSimplifier>(std::move(table));
  }

  ts::CompositionStrategy strategy;
  strategy.kind = ts::composition_kind_from_string(
      optional_field<std::string>(opts, "composition", ts::to_string(strategy.kind)));
  strategy.sample_fraction_p = p;
  strategy.rng_seed = seed;

  const auto originals = load_records<ts::TaggedExample>(in, ts::tagged_from_json);
  const auto simplified = ts::sample_and_simplify(originals, *simplifier, p, seed);
  const auto composed = ts::compose_training_set(originals, simplified, strategy);

  std::vector<json> records;
  for (const auto& e : composed) records.push_back(ts::tagged_to_json(e));
  write_ndjson(out, records);

  std::map<std::string, const ts::TaggedExample*> by_id;
  for (const auto& o : originals) by_id[o.example_id] = &o;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t preserving = 0;
  for (const auto& s : simplified) {
    const auto& parent = *by_id.at(s.parent_id);
    pairs.emplace_back(s.text, parent.text);
    preserving += ts::preserves_critical_info(parent, s.text);
  }
  json summary{{"originals", originals.size()},
               {"simplified", simplified.size()},
               {"preserving", preserving},
               {"written", records.size()},
               {"composition", ts::to_string(strategy.kind)},
               {"bleu_mean", nullptr},
               {"bleu_std", nullptr},
               {"out", out}};
  if (!pairs.empty()) {
    const auto div = ts::bleu_divergence(pairs);
    summary["bleu_mean"] = div.mean;
    summary["bleu_std"] = div.stddev;
  }
  return summary;
}

json gate_train_data(const json& opts, const Config&) {
  const auto out = path_opt(opts, "out");
  const auto pairs = load_records<gate::GatePair>(path_opt(opts, "in"), gate::pair_from_json);
  const auto data = gate::build_gate_dataset(pairs);
  for (const auto& d : data.rejected) log_warning(d);

  std::vector<json> records;
  for (const auto& e : data.training) records.push_back(gate::gate_example_to_json(e));
  write_ndjson(out, records);
  if (auto ex = optional_field<std::string>(opts, "excluded_out", ""); !ex.empty()) {
    std::vector<json> exc;
    for (const auto& e : data.excluded) exc.push_back(gate::gate_example_to_json(e));
    write_ndjson(ex, exc);
  }
  std::size_t good = 0;
  for (const auto& e : data.training) good += e.gate_label == gate::GateLabel::good;
  json summary{{"good", good},
               {"bad", data.training.size() - good},
               {"excluded", data.excluded.size()},
               {"rejected", data.rejected.size()},
               {"out", out}};
  if (auto model_out = optional_field<std::string>(opts, "model_out", ""); !model_out.empty()) {
    if (data.training.empty()) throw ValidationError("no good/bad examples to train a gate on");
    write_text_file(model_out, gate::NaiveBayesGate::train(data.training).model().to_json().dump() + "\n");
    summary["model"] = model_out;
  }
  return summary;
}

json gate_apply(const json& opts, const Config&) {
  const auto out = path_opt(opts, "out");
  const auto gate_name = optional_field<std::string>(opts, "gate", "good");
  std::unique_ptr<gate::GateClassifier> classifier;
  if (gate_name == "good" || gate_name == "bad") {
    classifier = std::make_unique<gate::ConstantGate>(gate::gate_label_from_string(gate_name));
  } else {
    classifier = std::make_unique<gate::NaiveBayesGate>(
        NaiveBayesClassifier::from_json(json::parse(read_text_file(gate_name))));
  }
  std::vector<json> records;
  std::size_t simplified = 0;
  for (const auto& r : read_ndjson(path_opt(opts, "in"))) {
    const auto orig = require<std::string>(r, "original_text");
    const auto simp = require<std::string>(r, "simplified_text");
    const auto& chosen = gate::gate_select(orig, simp, *classifier);
    const bool took_simplified = &chosen == &simp;
    simplified += took_simplified;
    records.push_back({{"id", optional_field<std::string>(r, "id", "")},
                       {"selected_text", chosen},
                       {"selected", took_simplified ? "simplified" : "original"}});
  }
  write_ndjson(out, records);
  return {{"records", records.size()}, {"simplified", simplified}, {"out", out}};
}

json build_med_corpus(const json& opts, const Config& cfg) {
  const auto out = path_opt(opts, "out");
  const auto threshold = optional_field<double>(opts, "similarity_threshold", cfg.similarity_threshold);
  med::MatchCriteria criteria;
  criteria.min_sentence_terms = optional_field<std::size_t>(opts, "min_sentence_terms", cfg.min_sentence_terms);
  criteria.min_title_terms = optional_field<std::size_t>(opts, "min_title_terms", cfg.min_title_terms);

  const auto dictionary = med::MedicalDictionary::load(path_opt(opts, "dictionary"), threshold);
  const auto corpus = load_records<med::AlignedPair>(path_opt(opts, "in"), med::pair_from_json);
  const auto ex = med::extract_corpus(corpus, dictionary, criteria);
  for (const auto& d : ex.diagnostics) log_warning(d);

  auto dump = [](const std::vector<med::AlignedPair>& pairs) {
    std::vector<json> recs;
    for (const auto& p : pairs) recs.push_back(med::pair_to_json(p));
    return recs;
  };
  write_ndjson(out, dump(ex.medical));
  json summary{{"input", corpus.size()}, {"medical", ex.medical.size()}, {"out", out}};
  if (auto rem = optional_field<std::string>(opts, "remainder_out", ""); !rem.empty()) {
    write_ndjson(rem, dump(ex.remainder));
  }
  if (auto dir = optional_field<std::string>(opts, "split_dir", ""); !dir.empty()) {
    const auto splits = med::split_corpus(ex.medical, seed_opt(opts, cfg));
    write_ndjson(fs::path(dir) / "train.ndjson", dump(splits.train));
    write_ndjson(fs::path(dir) / "dev.ndjson", dump(splits.dev));
    write_ndjson(fs::path(dir) / "test.ndjson", dump(splits.test));
    summary["splits"] = {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}};
  }
  return summary;
}

json gen_tasks(const json& opts, const Config& cfg) {
  const auto out = path_opt(opts, "out");
  const auto mode = mode_opt(opts, cfg);
  const auto pairs = load_records<med::AlignedPair>(path_opt(opts, "in"), med::pair_from_json);
  std::vector<json> records;
  for (const auto& p : pairs) {
    for (const auto& t : autocomplete::generate_tasks(p)) records.push_back(autocomplete::task_to_json(t, mode));
  }
  write_ndjson(out, records);
  return {{"pairs", pairs.size()}, {"tasks", records.size()}, {"out", out}};
}

json predict(const json& opts, const Config& cfg) {
  const auto out = path_opt(opts, "out");
  const auto top_n = optional_field<std::size_t>(opts, "top_n", 5);
  if (top_n < 1) throw ValidationError("top_n must be >= 1");
  const auto mode = mode_opt(opts, cfg);
  auto registry = cfg.build_registry();
  if (registry.size() == 0) throw ValidationError("no backends configured");
  auto ids = optional_field<std::vector<std::string>>(opts, "backends", registry.ids());
  for (const auto& id : ids) {
    if (!registry.contains(id)) throw ValidationError("unknown backend '" + id + "'");
  }

  const auto tasks = load_tasks(path_opt(opts, "tasks"));
  std::vector<json> records;
  std::size_t failures = 0;
  for (const auto& task : tasks) {
    const auto input = autocomplete::build_model_input(task, mode);
    for (const auto& id : ids) {
      try {
        for (auto& r : backends::suggestion_records(task.task_id, registry.predict(id, input, top_n))) {
          records.push_back(std::move(r));
        }
      } catch (const backends::BackendUnavailable& e) {
        ++failures;
        log_warning("task " + task.task_id + ": backend " + id + " unavailable: " + e.what());
      }
    }
  }
  write_ndjson(out, records);
  return {{"tasks", tasks.size()}, {"backends", ids}, {"records", records.size()}, {"failures", failures},
          {"out", out}};
}

json ensemble_eval(const json& opts, const Config& cfg) {
  const auto out = path_opt(opts, "out");
  const auto strategy = ensemble::strategy_from_string(optional_field<std::string>(opts, "strategy", "autometsl"));
  const auto seed = seed_opt(opts, cfg);
  const auto tasks = load_tasks(path_opt(opts, "tasks"));
  const auto logs = ensemble::assemble_logs(tasks, load_predictions(path_opt(opts, "predictions")),
                                            optional_field<std::vector<std::string>>(opts, "backend_order", {}));
  const auto ids = ensemble::log_backend_ids(logs);

  ensemble::StrategyInputs in;
  in.weights = cfg.ensemble;
  in.seed = seed;
  in.pooled = optional_field<bool>(opts, "pooled", false);

  std::unique_ptr<ensemble::ClassSelector> class_sel;
  std::unique_ptr<ensemble::LabelSetSelector> label_sel;
  const bool needs_selector = strategy == ensemble::Strategy::four_cc || strategy == ensemble::Strategy::autometsl;
  const auto train_tasks_path = optional_field<std::string>(opts, "train_tasks", "");
  const auto selector = optional_field<std::string>(opts, "selector", train_tasks_path.empty() ? "oracle" : "trained");
  json selector_info = nullptr;
  if (needs_selector) {
    if (selector == "oracle") {
      class_sel = std::make_unique<ensemble::OracleClassSelector>(logs);
      label_sel = std::make_unique<ensemble::OracleLabelSetSelector>(logs);
      selector_info = "oracle";
    } else if (selector == "trained") {
      if (train_tasks_path.empty()) throw ValidationError("selector 'trained' needs train_tasks and train_predictions");
      const auto train_tasks = load_tasks(train_tasks_path);
      const auto train_logs =
          ensemble::assemble_logs(train_tasks, load_predictions(path_opt(opts, "train_predictions")), ids);
      std::vector<std::string> task_ids;
      for (const auto& t : train_tasks) task_ids.push_back(t.task_id);
      const auto correctness = ensemble::top1_correctness(train_logs);
      auto four = ensemble::NaiveBayesClassSelector::train(
          train_tasks, ensemble::build_selector_dataset(task_ids, correctness, ensemble::SelectorMode::four_class, seed),
          ids);
      auto multi = ensemble::NaiveBayesLabelSetSelector::train(
          train_tasks, ensemble::build_selector_dataset(task_ids, correctness, ensemble::SelectorMode::multilabel, seed),
          ids);
      if (auto so = optional_field<std::string>(opts, "selector_out", ""); !so.empty()) {
        write_text_file(so, json{{"four_class", four.to_json()}, {"multilabel", multi.to_json()}}.dump() + "\n");
      }
      class_sel = std::make_unique<ensemble::NaiveBayesClassSelector>(std::move(four));
      label_sel = std::make_unique<ensemble::NaiveBayesLabelSetSelector>(std::move(multi));
      selector_info = {{"kind", "trained"}, {"train_tasks", train_tasks.size()}};
    } else {
      throw ValidationError("selector must be 'trained' or 'oracle'");
    }
    in.class_selector = class_sel.get();
    in.label_selector = label_sel.get();
  }

  const auto decisions = ensemble::run_strategy(logs, strategy, in);
  std::vector<json> records;
  std::vector<std::string> words, golds;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& d = decisions[i];
    records.push_back({{"task_id", d.task_id},
                       {"word", d.word},
                       {"backend_id", d.backend_id},
                       {"strategy", ensemble::to_string(strategy)}});
    words.push_back(d.word);
    golds.push_back(logs[i].task.gold_next);
  }
  write_ndjson(out, records);
  return {{"strategy", ensemble::to_string(strategy)},
          {"tasks", decisions.size()},
          {"backends", ids},
          {"selector", selector_info},
          {"upper_bound", ensemble::upper_bound(ensemble::top1_correctness(logs))},
          {"accuracy", eval::accuracy(words, golds)},
          {"out", out}};
}

namespace {

json evaluate_autocomplete(const json& opts) {
  const auto tasks = load_tasks(path_opt(opts, "tasks"));
  const auto at = optional_field<std::vector<std::size_t>>(opts, "at", {1});
  const auto axis_name = optional_field<std::string>(opts, "breakdown", "");
  const auto only_backend = optional_field<std::string>(opts, "backend", "");
  const auto records = read_ndjson(path_opt(opts, "predictions"));

  // ranked[backend][task_id] -> words by rank; decisions use backend "".
  std::map<std::string, std::map<std::string, std::vector<std::pair<std::size_t, std::string>>>> ranked;
  std::vector<std::string> backend_order;
  for (const auto& r : records) {
    std::string backend;
    std::size_t rank = 1;
    if (r.contains("rank")) {
      const auto p = backends::prediction_from_json(r);
      backend = p.backend_id;
      rank = p.rank;
    }
    if (!only_backend.empty() && backend != only_backend) continue;
    if (!ranked.count(backend)) backend_order.push_back(backend);
    ranked[backend][require<std::string>(r, "task_id")].emplace_back(rank, require<std::string>(r, "word"));
  }
  if (ranked.empty()) throw ValidationError("no predictions to evaluate");
  if (!axis_name.empty() && ranked.size() > 1) {
    throw ValidationError("breakdown over a multi-backend log needs a backend");
  }

  std::vector<std::string> golds;
  for (const auto& t : tasks) golds.push_back(t.gold_next);
  std::vector<eval::MetricReport> reports;
  std::size_t missing = 0;
  for (const auto& backend : backend_order) {
    auto& per_task = ranked[backend];
    std::vector<std::vector<std::string>> lists;
    for (const auto& t : tasks) {
      auto it = per_task.find(t.task_id);
      std::vector<std::string> words;
      if (it == per_task.end()) {
        ++missing;
      } else {
        std::stable_sort(it->second.begin(), it->second.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [rank, w] : it->second) words.push_back(w);
      }
      lists.push_back(std::move(words));
    }
    std::optional<std::string> cohort;
    if (!backend.empty() && backend_order.size() > 1) cohort = "backend=" + backend;
    for (auto n : at) {
      const auto name = n == 1 ? std::string("accuracy") : "accuracy@" + std::to_string(n);
      reports.push_back({name, eval::accuracy_at_n(lists, golds, n), cohort, tasks.size()});
    }
    if (!axis_name.empty()) {
      std::vector<bool> correct;
      for (std::size_t i = 0; i < tasks.size(); ++i) correct.push_back(!lists[i].empty() && lists[i][0] == golds[i]);
      for (auto& r : eval::breakdown(tasks, correct, eval::axis_from_string(axis_name))) reports.push_back(r);
    }
  }
  maybe_write_reports(opts, reports);
  return {{"reports", reports_json(reports)}, {"missing", missing}, {"table", eval::render_table(reports)}};
}

}  // namespace

json evaluate(const json& opts, const Config&) {
  const auto kind = optional_field<std::string>(opts, "kind", "autocomplete");
  if (kind == "autocomplete") return evaluate_autocomplete(opts);

  std::map<std::string, json> preds;
  for (const auto& r : read_ndjson(path_opt(opts, "predictions"))) preds[require<std::string>(r, "id")] = r;
  const auto golds = read_ndjson(path_opt(opts, "gold"));
  std::size_t missing = 0;
  std::vector<eval::MetricReport> reports;
  const auto n = golds.size();

  if (kind == "span") {
    std::vector<eval::PRF> items;
    for (const auto& g : golds) {
      const eval::CharSpan gs{require<std::size_t>(g, "start"), require<std::size_t>(g, "end")};
      auto it = preds.find(require<std::string>(g, "id"));
      eval::CharSpan ps{0, 0};
      if (it == preds.end()) {
        ++missing;
      } else {
        ps = {require<std::size_t>(it->second, "start"), require<std::size_t>(it->second, "end")};
      }
      items.push_back(eval::char_overlap_f1(ps, gs));
    }
    const auto avg = eval::macro_average(items);
    reports = {{"precision", avg.precision, std::nullopt, n},
               {"recall", avg.recall, std::nullopt, n},
               {"f1", avg.f1, std::nullopt, n}};
  } else if (kind == "text") {
    double f1 = 0.0, em = 0.0;
    for (const auto& g : golds) {
      auto it = preds.find(require<std::string>(g, "id"));
      std::string pt;
      if (it == preds.end()) {
        ++missing;
      } else {
        pt = require<std::string>(it->second, "text");
      }
      const auto s = eval::token_f1_em(pt, require<std::string>(g, "text"));
      f1 += s.f1;
      em += s.em;
    }
    const double d = n ? static_cast<double>(n) : 1.0;
    reports = {{"f1", f1 / d, std::nullopt, n}, {"em", em / d, std::nullopt, n}};
  } else {
    throw ValidationError("unknown eval kind '" + kind + "'");
  }
  maybe_write_reports(opts, reports);
  return {{"reports", reports_json(reports)}, {"missing", missing}, {"table", eval::render_table(reports)}};
}

}  // namespace lowreskit::pipelines
