// Acceptance harness: one PASS/FAIL line per criterion. Exit status is the
// number of failed primary criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lowreskit/autocomplete.hpp"
#include "lowreskit/ensemble.hpp"
#include "lowreskit/eval.hpp"
#include "lowreskit/med_corpus.hpp"
#include "lowreskit/qa_augment.hpp"
#include "lowreskit/retrieval.hpp"
#include "lowreskit/service.hpp"
#include "lowreskit/simp_gate.hpp"

using namespace lowreskit;
namespace fs = std::filesystem;

namespace {

// Pinned limits and tolerances.
constexpr double kSpanSeconds = 10.0;
constexpr double kRetrievalSeconds = 5.0;
constexpr double kEnsembleSeconds = 10.0;
constexpr double kEndToEndSeconds = 60.0;
constexpr double kArithmeticTol = 1e-12;
constexpr double kMetricTol = 1e-12;
constexpr int kSpanFuzzCases = 10000;
constexpr int kRetrievalQuestions = 1000;
constexpr int kRetrievalDocs = 50;
constexpr int kEnsembleLogs = 10000;
constexpr int kOracleLogs = 100;
constexpr int kOracleTasks = 1000;
constexpr double kOracleSpread = 0.12;  // confidence spread, below 0.125
constexpr int kCorpusFuzzTrials = 1000;
constexpr int kGateFixtures = 1000;
constexpr int kGateExamples = 100;

std::string fixture(const std::string& name) { return std::string(LRK_FIXTURES) + "/" + name; }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first violation: " << what << "; ";
    pass = pass && ok;
  }
};

int g_failed_primary = 0;

void run(const std::string& tier, const std::string& name, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what() << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail << "over time limit " << limit_s << " s; ";
  }
  if (!o.pass && tier == "PRIMARY") ++g_failed_primary;
  char t[32];
  std::snprintf(t, sizeof t, "%.3f", secs);
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << tier << "] " << name << " (" << t << " s) " << o.detail.str()
            << std::endl;
}

// --- span shift -------------------------------------------------------------

void span_shift(Outcome& o) {
  const auto ex = qa::example_from_json(json::parse(read_text_file(fixture("qa_gtk2.json"))));
  const auto left = qa::shift_span(ex, -19);
  const auto right = qa::shift_span(ex, 16);
  o.require(left.text == "Libraries missing, install gtk2 libraries", "d=-19 text '" + left.text + "'");
  o.require(right.text == "install gtk2 libraries (32 and 64 bit)", "d=+16 text '" + right.text + "'");

  std::mt19937_64 gen(20240601);
  const std::u32string alphabet = U"ab cdé中 .";
  std::size_t violations = 0, degenerate = 0;
  for (int i = 0; i < kSpanFuzzCases; ++i) {
    std::u32string doc;
    const std::size_t len = 1 + gen() % 80;
    for (std::size_t k = 0; k < len; ++k) doc += alphabet[gen() % alphabet.size()];
    const std::size_t s = gen() % doc.size();
    const std::size_t e = s + 1 + gen() % (doc.size() - s);
    qa::QAExample q;
    q.example_id = "f" + std::to_string(i);
    q.documents = {{"d", encode_utf8(doc)}};
    q.answer = qa::AnswerSpan{"d", s, e};
    q.answerable = true;
    int d = static_cast<int>(gen() % 81) - 40;
    if (d == 0) d = -1;
    const auto snap = gen() % 2 ? qa::BoundarySnap::word : qa::BoundarySnap::exact;
    // Clamp oracle for the exact shift.
    long long os = static_cast<long long>(s), oe = static_cast<long long>(e);
    if (d < 0) os = std::max(0LL, os + d);
    else oe = std::min(static_cast<long long>(doc.size()), oe + d);
    const bool exact_degenerate = os == static_cast<long long>(s) && oe == static_cast<long long>(e);
    try {
      const auto a = qa::shift_span(q, d, snap);
      const auto ns = a.new_span.start_char, ne = a.new_span.end_char;
      bool ok = ns <= s && ne >= e && ne <= doc.size() && ns < ne && (ns != s || ne != e) &&
                a.text == encode_utf8(doc.substr(ns, ne - ns)) && a.new_span.doc_id == "d";
      if (snap == qa::BoundarySnap::exact) ok = ok && ns == static_cast<std::size_t>(os) && ne == static_cast<std::size_t>(oe);
      else ok = ok && ns <= static_cast<std::size_t>(os) && ne >= static_cast<std::size_t>(oe);
      if (!ok) {
        ++violations;
        o.require(false, "case " + std::to_string(i));
      }
    } catch (const qa::DegenerateShift&) {
      ++degenerate;
      if (!exact_degenerate) {
        ++violations;
        o.require(false, "unexpected degenerate shift, case " + std::to_string(i));
      }
    }
  }
  o.detail << kSpanFuzzCases << " fuzz cases, " << violations << " violations, " << degenerate
           << " degenerate shifts rejected";
}

// --- retrieval --------------------------------------------------------------

std::vector<retrieval::DocScore> group_by_max_oracle(const std::vector<retrieval::SpanScore>& spans) {
  std::map<std::string, std::pair<std::size_t, double>> groups;  // doc -> (first index, max)
  for (std::size_t i = 0; i < spans.size(); ++i) {
    auto [it, fresh] = groups.emplace(spans[i].doc_id, std::make_pair(i, spans[i].score));
    if (!fresh) it->second.second = std::max(it->second.second, spans[i].score);
  }
  std::vector<std::pair<std::size_t, retrieval::DocScore>> v;
  for (const auto& [doc, g] : groups) v.push_back({g.first, {doc, g.second}});
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second.score > b.second.score; });
  std::vector<retrieval::DocScore> out;
  for (const auto& p : v) out.push_back(p.second);
  return out;
}

void retrieval_oracle(Outcome& o) {
  std::mt19937_64 gen(77);
  std::vector<retrieval::RetrievalResult> results;
  std::map<std::string, std::string> gold;
  std::size_t mismatches = 0;
  for (int q = 0; q < kRetrievalQuestions; ++q) {
    const std::string qid = "q" + std::to_string(q);
    std::vector<retrieval::SpanScore> spans;
    for (int d = 0; d < kRetrievalDocs; ++d) {
      const int n = 1 + static_cast<int>(gen() % 4);
      for (int k = 0; k < n; ++k) {
        spans.push_back({qid, "d" + std::to_string(d), 0, 1, static_cast<double>(gen() % 40) / 8.0});
      }
    }
    std::shuffle(spans.begin(), spans.end(), gen);
    const auto got = retrieval::score_documents(spans);
    const auto want = group_by_max_oracle(spans);
    const std::size_t k = 1 + gen() % 60;
    const auto kept = retrieval::keep_top_k(qid, got, k);
    const std::vector<retrieval::DocScore> want_kept(want.begin(), want.begin() + std::min(k, want.size()));
    if (got != want || kept.ranked_docs != want_kept) {
      ++mismatches;
      o.require(false, "question " + qid);
    }
    results.push_back(retrieval::keep_top_k(qid, got, kRetrievalDocs));
    if (gen() % 5) gold[qid] = "d" + std::to_string(gen() % kRetrievalDocs);
  }
  // DRA@n monotone on the random set and the QA fixture.
  double prev = -1;
  for (std::size_t n = 1; n <= kRetrievalDocs; ++n) {
    const double v = retrieval::dra_at(results, gold, n).value;
    o.require(v >= prev, "DRA not monotone at n=" + std::to_string(n));
    prev = v;
  }
  o.require(prev == 1.0, "DRA@50 below 1 with all 50 documents kept");
  std::vector<retrieval::SpanScore> fx;
  for (const auto& r : read_ndjson(fixture("span_scores.ndjson"))) fx.push_back(retrieval::span_from_json(r));
  const auto fx_results = retrieval::rerank(fx, 5);
  std::map<std::string, std::string> fx_gold;
  for (const auto& r : read_ndjson(fixture("qa_examples.ndjson"))) {
    const auto ex = qa::example_from_json(r);
    if (ex.answerable && ex.answer) fx_gold[ex.example_id] = ex.answer->doc_id;
  }
  prev = -1;
  for (std::size_t n = 1; n <= 5; ++n) {
    const double v = retrieval::dra_at(fx_results, fx_gold, n).value;
    o.require(v >= prev, "fixture DRA not monotone at n=" + std::to_string(n));
    prev = v;
  }
  o.detail << kRetrievalQuestions << "x" << kRetrievalDocs << " questions, " << mismatches << " mismatches";
}

// --- ensemble ---------------------------------------------------------------

const std::vector<std::string> kBackends{"roberta", "bert", "xlnet", "gpt2"};

std::vector<ensemble::TaskLog> random_logs(std::mt19937_64& gen, std::size_t tasks, double lo, double spread) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ensemble::TaskLog> logs;
  for (std::size_t t = 0; t < tasks; ++t) {
    ensemble::TaskLog log;
    log.task.task_id = "t" + std::to_string(t);
    log.task.typed_prefix.assign(1 + gen() % 10, "w");
    log.task.position = log.task.typed_prefix.size();
    log.task.difficult_tokens = {"d"};
    log.task.gold_next = "v" + std::to_string(gen() % 8);
    for (const auto& b : kBackends) {
      std::vector<std::string> vocab;
      for (int i = 0; i < 8; ++i) vocab.push_back("v" + std::to_string(i));
      std::shuffle(vocab.begin(), vocab.end(), gen);
      std::vector<double> p(5);
      for (auto& x : p) x = lo + spread * u(gen);
      std::sort(p.rbegin(), p.rend());
      backends::SuggestionList l{b, {}};
      for (int i = 0; i < 5; ++i) l.items.push_back({vocab[i], p[i]});
      log.records.push_back(l);
    }
    logs.push_back(log);
  }
  return logs;
}

double accuracy_of(const std::vector<ensemble::TaskLog>& logs, const std::vector<ensemble::Decision>& d) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) hits += d[i].word == logs[i].task.gold_next;
  return static_cast<double>(hits) / static_cast<double>(logs.size());
}

double backend_accuracy(const std::vector<ensemble::TaskLog>& logs, std::size_t b) {
  std::size_t hits = 0;
  for (const auto& l : logs) hits += l.records[b].items.front().word == l.task.gold_next;
  return static_cast<double>(hits) / static_cast<double>(logs.size());
}

void ensemble_arithmetic(Outcome& o) {
  const ensemble::EnsembleWeights w;
  const double a = ensemble::score_4cc({"w", "bert", 0.8, 1}, "bert", w);
  const double b = ensemble::score_4cc({"w", "bert", 0.8, 1}, "gpt2", w);
  const double c = ensemble::score_autometsl({"w", "bert", 0.6, 1}, {"bert", "gpt2"}, w);
  const double d = ensemble::score_autometsl({"w", "bert", 0.6, 1}, {"gpt2"}, w);
  o.require(std::abs(a - 0.9) <= kArithmeticTol, "4CC selected " + std::to_string(a));
  o.require(std::abs(b - 0.4) <= kArithmeticTol, "4CC other " + std::to_string(b));
  o.require(std::abs(c - 0.425) <= kArithmeticTol, "AutoMeTS in Ls " + std::to_string(c));
  o.require(std::abs(d - 0.3) <= kArithmeticTol, "AutoMeTS not in Ls " + std::to_string(d));

  std::mt19937_64 gen(4242);
  std::size_t argmax_mismatch = 0, ub_violations = 0, majority_violations = 0;
  std::size_t majority_beyond_top1 = 0;  // tasks majority gets right with every top-1 wrong
  for (int i = 0; i < kEnsembleLogs; ++i) {
    const auto logs = random_logs(gen, 1 + gen() % 20, 0.0, 1.0);
    // select_best vs brute force on every task, both scorers.
    for (const auto& log : logs) {
      const std::string sel = kBackends[gen() % 4];
      std::set<std::string> ls;
      for (const auto& bk : kBackends)
        if (gen() % 2) ls.insert(bk);
      for (int which = 0; which < 2; ++which) {
        ensemble::Scorer scorer = which == 0 ? ensemble::Scorer([&](const ensemble::Candidate& cd) {
          return ensemble::score_4cc(cd, sel, w);
        })
                                             : ensemble::Scorer([&](const ensemble::Candidate& cd) {
                                                 return ensemble::score_autometsl(cd, ls, w);
                                               });
        const auto got = ensemble::select_best(log.records, scorer);
        double best = -1;
        std::string best_b;
        for (const auto& r : log.records) {
          const double p = r.items[0].probability;
          const double s = which == 0 ? w.alpha * p + w.theta * (r.model_id == sel ? 1.0 : 0.0)
                                      : w.beta * p + w.sigma * (ls.count(r.model_id) ? w.label_bonus : 0.0);
          if (s > best) {
            best = s;
            best_b = r.model_id;
          }
        }
        if (got.backend_id != best_b) ++argmax_mismatch;
      }
    }
    // Upper bound vs individuals and every strategy.
    const double ub = ensemble::upper_bound(ensemble::top1_correctness(logs));
    for (std::size_t bk = 0; bk < kBackends.size(); ++bk) ub_violations += backend_accuracy(logs, bk) > ub;
    const ensemble::OracleClassSelector cs(logs);
    const ensemble::OracleLabelSetSelector lsel(logs);
    ensemble::StrategyInputs in;
    in.class_selector = &cs;
    in.label_selector = &lsel;
    in.seed = static_cast<std::uint64_t>(i);
    for (auto s : {ensemble::Strategy::four_cc, ensemble::Strategy::autometsl, ensemble::Strategy::upper_bound}) {
      ub_violations += accuracy_of(logs, ensemble::run_strategy(logs, s, in)) > ub + kArithmeticTol;
    }
    const auto maj = ensemble::run_strategy(logs, ensemble::Strategy::majority, in);
    majority_violations += accuracy_of(logs, maj) > ub + kArithmeticTol;
    const auto top1 = ensemble::top1_correctness(logs);
    for (std::size_t t = 0; t < logs.size(); ++t) {
      const bool any = std::find(top1[t].begin(), top1[t].end(), true) != top1[t].end();
      majority_beyond_top1 += !any && maj[t].word == logs[t].task.gold_next;
    }
  }
  o.require(argmax_mismatch == 0, std::to_string(argmax_mismatch) + " select_best mismatches");
  o.require(ub_violations == 0, std::to_string(ub_violations) + " upper-bound violations by backends/4CC/AutoMeTS");
  o.require(majority_violations == 0,
            std::to_string(majority_violations) + " logs where majority vote (top-5 pool) beats the top-1 upper bound");
  o.detail << kEnsembleLogs << " logs; select_best mismatches " << argmax_mismatch
           << "; UB violations (backends, 4CC, AutoMeTS) " << ub_violations << "; UB violations (majority) "
           << majority_violations << " (majority right with every top-1 wrong on " << majority_beyond_top1
           << " tasks)";
}

void oracle_selector(Outcome& o) {
  std::mt19937_64 gen(2101);
  std::size_t below = 0;
  double min_margin = 1.0;
  for (int i = 0; i < kOracleLogs; ++i) {
    const auto logs = random_logs(gen, kOracleTasks, 0.3, kOracleSpread);
    const ensemble::OracleLabelSetSelector ls(logs);
    ensemble::StrategyInputs in;
    in.label_selector = &ls;
    const double acc = accuracy_of(logs, ensemble::run_strategy(logs, ensemble::Strategy::autometsl, in));
    double best = 0;
    for (std::size_t b = 0; b < kBackends.size(); ++b) best = std::max(best, backend_accuracy(logs, b));
    min_margin = std::min(min_margin, acc - best);
    if (acc < best) {
      ++below;
      o.require(false, "log " + std::to_string(i));
    }
  }
  o.detail << kOracleLogs << " logs of " << kOracleTasks << " tasks; " << below
           << " below best individual; minimum margin " << min_margin;
}

// --- task generation --------------------------------------------------------

void task_generation(Outcome& o) {
  const auto pair = med::pair_from_json(read_ndjson(fixture("med_pairs.ndjson")).front());
  const std::vector<std::pair<std::string, std::string>> table{
      {"This", "insulin"},
      {"This insulin", "tells"},
      {"This insulin tells", "the"},
      {"This insulin tells the", "cells"},
      {"This insulin tells the cells", "to"},
      {"This insulin tells the cells to", "take"},
      {"This insulin tells the cells to take", "up"},
      {"This insulin tells the cells to take up", "glucose"},
      {"This insulin tells the cells to take up glucose", "from"},
      {"This insulin tells the cells to take up glucose from", "the"},
      {"This insulin tells the cells to take up glucose from the", "blood"},
      {"This insulin tells the cells to take up glucose from the blood", "."},
  };
  o.require(split_ws(pair.simple_text).size() == 13, "fixture sentence is not 13 tokens");
  const auto tasks = autocomplete::generate_tasks(pair);
  o.require(tasks.size() == table.size(), std::to_string(tasks.size()) + " tasks");
  for (std::size_t i = 0; i < std::min(tasks.size(), table.size()); ++i) {
    o.require(join(tasks[i].typed_prefix) == table[i].first && tasks[i].gold_next == table[i].second,
              "task " + std::to_string(i + 1));
  }
  o.detail << tasks.size() << " tasks";
}

// --- metrics ----------------------------------------------------------------

void metric_oracles(Outcome& o) {
  o.require(std::abs(eval::char_overlap_f1({10, 20}, {15, 25}).f1 - 0.5) <= kMetricTol, "partial overlap");
  o.require(std::abs(eval::char_overlap_f1({3, 9}, {3, 9}).f1 - 1.0) <= kMetricTol, "identical spans");
  o.require(std::abs(eval::char_overlap_f1({0, 5}, {5, 9}).f1 - 0.0) <= kMetricTol, "disjoint spans");
  const auto t = eval::token_f1_em("a b c", "b c d");
  o.require(std::abs(t.f1 - 2.0 / 3.0) <= kMetricTol && t.em == 0.0, "token F1 bag overlap");

  std::mt19937_64 gen(55);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<std::string>> ranked;
    std::vector<std::string> golds;
    const int tasks = 1 + static_cast<int>(gen() % 60);
    for (int i = 0; i < tasks; ++i) {
      std::vector<std::string> r;
      for (int k = static_cast<int>(gen() % 12); k > 0; --k) r.push_back("w" + std::to_string(gen() % 15));
      ranked.push_back(r);
      golds.push_back("w" + std::to_string(gen() % 15));
    }
    for (std::size_t n = 1; n <= 12; ++n) {
      int hits = 0;
      for (int i = 0; i < tasks; ++i) {
        const auto end = ranked[i].begin() + static_cast<std::ptrdiff_t>(std::min(n, ranked[i].size()));
        hits += std::find(ranked[i].begin(), end, golds[i]) != end;
      }
      if (std::abs(eval::accuracy_at_n(ranked, golds, n) - static_cast<double>(hits) / tasks) > kMetricTol) ++mismatches;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " accuracy@n mismatches");

  std::size_t split_errors = 0;
  for (std::size_t n = 3; n <= 400; ++n) {
    std::vector<med::AlignedPair> pairs;
    for (std::size_t i = 0; i < n; ++i) pairs.push_back({"p" + std::to_string(i), "t", "d", "s", {}});
    const auto s = med::split_corpus(pairs, n);
    std::set<std::string> seen;
    bool ok = true;
    for (const auto* part : {&s.train, &s.dev, &s.test})
      for (const auto& p : *part) ok = ok && seen.insert(p.pair_id).second;
    const std::size_t fifteen = n * 15 / 100;
    ok = ok && seen.size() == n && s.dev.size() == fifteen && s.test.size() == fifteen &&
         s.train.size() == n - 2 * fifteen;
    split_errors += !ok;
  }
  o.require(split_errors == 0, std::to_string(split_errors) + " bad splits");
  o.detail << "interval and token cases exact; accuracy@n mismatches " << mismatches << "; split errors "
           << split_errors << " over n=3..400";
}

// --- corpus filter ----------------------------------------------------------

void corpus_filter(Outcome& o) {
  const auto dict = med::MedicalDictionary::load(fixture("med_dictionary.tsv"));
  std::vector<med::AlignedPair> pairs;
  for (const auto& r : read_ndjson(fixture("med_pairs.ndjson"))) pairs.push_back(med::pair_from_json(r));
  std::set<std::string> expected, got;
  for (const auto& r : read_ndjson(fixture("med_pairs_labels.ndjson")))
    if (r["medical"].get<bool>()) expected.insert(r["id"].get<std::string>());
  for (const auto& p : med::extract_corpus(pairs, dict).medical) got.insert(p.pair_id);
  o.require(expected.size() == 7, "label file does not mark 7 pairs");
  o.require(got == expected, std::to_string(got.size()) + " pairs extracted");

  const auto base = dict.terms();
  const std::vector<std::string> extra{"insulins", "glucoze", "railway",  "cells", "blood",  "the",
                                       "levels",   "kidney",  "diabetic", "sugar", "release", "pancreas"};
  std::mt19937_64 gen(1000);
  std::size_t flips = 0;
  for (int trial = 0; trial < kCorpusFuzzTrials; ++trial) {
    std::vector<med::DictionaryTerm> small;
    for (const auto& t : base)
      if (gen() % 2) small.push_back(t);
    if (small.empty()) small.push_back(base[gen() % base.size()]);
    auto big = small;
    for (const auto& e : extra)
      if (gen() % 2) big.push_back({e, "Extra"});
    for (const auto& t : base)
      if (gen() % 3 == 0) big.push_back(t);
    std::shuffle(big.begin(), big.end(), gen);
    const med::MedicalDictionary ds(small), db(big);
    for (const auto& p : pairs) {
      if (med::is_medical_pair(p, ds) && !med::is_medical_pair(p, db)) {
        ++flips;
        o.require(false, "trial " + std::to_string(trial) + " pair " + p.pair_id);
      }
    }
  }
  o.detail << got.size() << " of 20 pairs extracted; " << kCorpusFuzzTrials << " growth trials, " << flips << " flips";
}

// --- gate -------------------------------------------------------------------

class LabelRuleGate : public gate::GateClassifier {
 public:
  std::map<std::string, gate::GateLabel> labels;  // keyed by original text
  gate::GateLabel classify(const std::string& o, const std::string&) override {
    const auto l = labels.at(o);
    return l == gate::GateLabel::excluded ? gate::GateLabel::bad : l;
  }
};

void gate_dominance(Outcome& o) {
  std::mt19937_64 gen(31337);
  const std::vector<std::string> labels{"entailment", "neutral", "contradiction"};
  std::size_t violations = 0;
  for (int f = 0; f < kGateFixtures; ++f) {
    LabelRuleGate oracle;
    int orig = 0, simp = 0, gated = 0;
    std::vector<std::tuple<std::string, std::string, std::string, std::string, std::string>> rows;
    for (int i = 0; i < kGateExamples; ++i) {
      const auto gold = labels[gen() % 3], po = labels[gen() % 3], ps = labels[gen() % 3];
      const std::string ot = "o" + std::to_string(i), st = "s" + std::to_string(i);
      oracle.labels[ot] = gate::label_pair(po, ps, gold);
      rows.emplace_back(ot, st, po, ps, gold);
    }
    for (const auto& [ot, st, po, ps, gold] : rows) {
      orig += po == gold;
      simp += ps == gold;
      const auto& chosen = gate::gate_select(ot, st, oracle);
      gated += (&chosen == &st ? ps : po) == gold;
    }
    if (gated < std::max(orig, simp)) {
      ++violations;
      o.require(false, "fixture " + std::to_string(f));
    }
  }
  o.detail << kGateFixtures << " fixtures of " << kGateExamples << " examples, " << violations << " violations";
}

// --- end to end -------------------------------------------------------------

void end_to_end(Outcome& o, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cli = LRK_CLI;
  const std::string cfg = " --config '" + fixture("config.json") + "' ";
  auto w = [&](const std::string& f) { return "'" + (work / f).string() + "'"; };
  const std::vector<std::pair<std::string, std::string>> steps{
      {"build-med-corpus", "build-med-corpus --in '" + fixture("med_pairs.ndjson") + "' --dictionary '" +
                               fixture("med_dictionary.tsv") + "' --out " + w("medical.ndjson")},
      {"gen-tasks", "gen-tasks --in " + w("medical.ndjson") + " --out " + w("tasks.ndjson")},
      {"predict", "predict --tasks " + w("tasks.ndjson") + " --out " + w("preds.ndjson")},
      {"ensemble-eval", "ensemble-eval --strategy autometsl --tasks " + w("tasks.ndjson") + " --predictions " +
                            w("preds.ndjson") + " --out " + w("decisions.ndjson")},
      {"eval", "eval --tasks " + w("tasks.ndjson") + " --predictions " + w("decisions.ndjson") + " --out " +
                   w("report.ndjson")},
  };
  for (const auto& [name, args] : steps) {
    const std::string cmd = "'" + cli + "'" + cfg + args + " > " + w(name + ".log") + " 2>&1";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, name + " exited with " + std::to_string(rc));
    if (rc != 0) return;
  }
  const auto reports = read_ndjson(work / "report.ndjson");
  o.require(!reports.empty() && reports[0]["metric"] == "accuracy", "no accuracy MetricReport");
  if (!reports.empty()) o.detail << "accuracy " << reports[0]["value"].get<double>() << " over " << reports[0]["count"] << " tasks";
}

// --- session replay (secondary) ---------------------------------------------

void session_replay(Outcome& o) {
  auto cfg = Config::load(fixture("config.json"));
  service::SuggestService svc(cfg, cfg.build_registry());
  const std::string difficult = "Lowered glucose levels result in the reduced release of insulin .";
  const std::vector<std::string> target{"This", "insulin", "tells", "the", "cells", "to", "take", "up", "glucose", "."};
  std::vector<std::string> typed;
  double ts = 0;
  std::size_t accepts = 0;
  auto log = [&](const std::string& kind, json payload) {
    payload["timestamp"] = ++ts;
    const auto r = svc.log_event({{"session_id", "replay"}, {"event", kind}, {"payload", payload}});
    o.require(r.status == 200, kind + " event rejected: " + r.dump());
  };
  std::map<std::size_t, json> served;  // prefix length -> suggestion words
  for (const auto& word : target) {
    const auto s = svc.suggest({{"difficult", difficult}, {"typed", typed}, {"n", 5}, {"strategy", "single:reference"}});
    json words = json::array();
    for (const auto& x : s.body["suggestions"]) words.push_back(x["word"]);
    served[typed.size()] = words;
    log("suggest_shown", {{"words", words}});
    const auto it = std::find(words.begin(), words.end(), word);
    if (it != words.end()) {
      log("accepted", {{"word", word}, {"rank", 1 + (it - words.begin())}});
      ++accepts;
    } else {
      log("overridden", {{"word", word}, {"rank", nullptr}});
    }
    typed.push_back(word);
  }
  log("finished", json::object());
  const auto sess = svc.session("replay");
  o.require(sess.body["sentence"] == json(target), "reconstructed " + sess.body["sentence"].dump());
  std::size_t prefix = 0;
  for (const auto& e : sess.body["events"]) {
    if (e["event"] == "accepted") {
      const auto& words = served.at(prefix);
      const auto rank = e["payload"]["rank"].get<std::size_t>();
      o.require(words.at(rank - 1) == e["payload"]["word"], "rank mismatch at prefix " + std::to_string(prefix));
    }
    if (e["event"] == "accepted" || e["event"] == "overridden") ++prefix;
  }
  o.detail << target.size() << " tokens, " << accepts << " accepted, " << target.size() - accepts << " overridden";
}

}  // namespace

int main(int argc, char** argv) {
  set_warnings_enabled(false);
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "lowreskit_acceptance";

  run("PRIMARY", "span-shift fidelity", kSpanSeconds, span_shift);
  run("PRIMARY", "retrieval oracle equivalence", kRetrievalSeconds, retrieval_oracle);
  run("PRIMARY", "ensemble arithmetic and upper bound", kEnsembleSeconds, ensemble_arithmetic);
  run("PRIMARY", "oracle-selector dominance", 0, oracle_selector);
  run("PRIMARY", "task generation (13-token sentence)", 0, task_generation);
  run("PRIMARY", "metric oracles and splits", 0, metric_oracles);
  run("PRIMARY", "corpus filter", 0, corpus_filter);
  run("PRIMARY", "gate dominance", 0, gate_dominance);
  run("PRIMARY", "end-to-end offline chain", kEndToEndSeconds, [&](Outcome& o) { end_to_end(o, work); });
  run("SECONDARY", "session replay", 0, session_replay);

  std::cout << (g_failed_primary == 0 ? "all primary criteria passed" : std::to_string(g_failed_primary) +
                                                                            " primary criteria failed")
            << std::endl;
  return g_failed_primary;
}
