#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "lowreskit/ensemble.hpp"

using namespace lowreskit;
using namespace lowreskit::ensemble;
using backends::Suggestion;
using backends::SuggestionList;

namespace {

const std::vector<std::string> kBackends{"roberta", "bert", "xlnet", "gpt2"};

SuggestionList list(const std::string& id, std::vector<std::string> words, double top = 0.5) {
  SuggestionList l{id, {}};
  for (std::size_t i = 0; i < words.size(); ++i) l.items.push_back({words[i], top / static_cast<double>(i + 1)});
  return l;
}

// Random log: each backend proposes 5 distinct words from a small vocabulary
// with non-increasing probabilities in [lo, lo + spread).
std::vector<TaskLog> random_logs(std::mt19937_64& gen, std::size_t tasks, double lo = 0.0, double spread = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TaskLog> logs;
  for (std::size_t t = 0; t < tasks; ++t) {
    TaskLog log;
    log.task.task_id = "t" + std::to_string(t);
    log.task.typed_prefix = {"w"};
    log.task.position = 1;
    log.task.gold_next = "v" + std::to_string(gen() % 8);
    for (const auto& b : kBackends) {
      std::vector<std::string> vocab;
      for (int i = 0; i < 8; ++i) vocab.push_back("v" + std::to_string(i));
      std::shuffle(vocab.begin(), vocab.end(), gen);
      std::vector<double> p(5);
      for (auto& x : p) x = lo + spread * u(gen);
      std::sort(p.rbegin(), p.rend());
      SuggestionList l{b, {}};
      for (int i = 0; i < 5; ++i) l.items.push_back({vocab[i], p[i]});
      log.records.push_back(l);
    }
    logs.push_back(log);
  }
  return logs;
}

double accuracy(const std::vector<TaskLog>& logs, const std::vector<Decision>& d) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) hits += d[i].word == logs[i].task.gold_next;
  return static_cast<double>(hits) / static_cast<double>(logs.size());
}

double backend_accuracy(const std::vector<TaskLog>& logs, std::size_t b) {
  std::size_t hits = 0;
  for (const auto& l : logs) hits += l.records[b].items.front().word == l.task.gold_next;
  return static_cast<double>(hits) / static_cast<double>(logs.size());
}

}  // namespace

TEST_CASE("scoring arithmetic") {
  const EnsembleWeights w;
  CHECK(score_4cc({"w", "bert", 0.8, 1}, "bert", w) == doctest::Approx(0.9));
  CHECK(score_4cc({"w", "bert", 0.8, 1}, "gpt2", w) == doctest::Approx(0.4));
  CHECK(score_autometsl({"w", "bert", 0.6, 1}, {"bert", "gpt2"}, w) == doctest::Approx(0.425));
  CHECK(score_autometsl({"w", "bert", 0.6, 1}, {"gpt2"}, w) == doctest::Approx(0.3));
  CHECK(score_autometsl({"w", "bert", 0.6, 1}, {}, w) == doctest::Approx(0.3));
  EnsembleWeights bad;
  bad.theta = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("select_best picks the maximum, first backend on ties") {
  const std::vector<SuggestionList> recs{list("a", {"x"}), list("b", {"y"}), list("c", {"z"}), list("d", {"q"})};
  const std::map<std::string, double> scores{{"a", 0.9}, {"b", 0.4}, {"c", 0.3}, {"d", 0.425}};
  auto s = select_best(recs, [&](const Candidate& c) { return scores.at(c.backend_id); });
  CHECK(s.backend_id == "a");
  CHECK(s.word == "x");
  CHECK(select_best({recs[2]}, [](const Candidate&) { return 0.0; }).backend_id == "c");
  CHECK(select_best(recs, [](const Candidate&) { return 1.0; }).backend_id == "a");
  CHECK_THROWS_AS(select_best({}, [](const Candidate&) { return 0.0; }), ValidationError);
  CHECK_THROWS_AS(select_best({list("a", {})}, [](const Candidate&) { return 0.0; }), ValidationError);
  // Empty lists are skipped.
  CHECK(select_best({list("a", {}), list("b", {"y"})}, [](const Candidate&) { return 0.0; }).backend_id == "b");
}

TEST_CASE("select_best agrees with a brute-force argmax") {
  std::mt19937_64 gen(99);
  const EnsembleWeights w;
  for (const auto& log : random_logs(gen, 500)) {
    const std::string sel = kBackends[gen() % 4];
    const auto got = select_best(log.records, [&](const Candidate& c) { return score_4cc(c, sel, w); });
    double best = -1;
    std::string best_b, best_w;
    for (const auto& r : log.records) {
      const double s = w.alpha * r.items[0].probability + w.theta * (r.model_id == sel);
      if (s > best) {
        best = s;
        best_b = r.model_id;
        best_w = r.items[0].word;
      }
    }
    CHECK(got.backend_id == best_b);
    CHECK(got.word == best_w);
  }
}

TEST_CASE("degenerate weights reduce to confidence ranking and are scale invariant") {
  std::mt19937_64 gen(5);
  EnsembleWeights w;
  w.theta = 0;
  w.sigma = 0;
  for (auto log : random_logs(gen, 300)) {
    const auto a = select_best(log.records, [&](const Candidate& c) { return score_4cc(c, "bert", w); });
    std::size_t arg = 0;
    for (std::size_t b = 1; b < log.records.size(); ++b)
      if (log.records[b].items[0].probability > log.records[arg].items[0].probability) arg = b;
    CHECK(a.backend_id == log.records[arg].model_id);
    const auto m = select_best(log.records, [&](const Candidate& c) { return score_autometsl(c, {}, w); });
    CHECK(m.backend_id == a.backend_id);
    for (auto& r : log.records)
      for (auto& s : r.items) s.probability *= 0.37;
    CHECK(select_best(log.records, [&](const Candidate& c) { return score_4cc(c, "bert", w); }).backend_id ==
          a.backend_id);
  }
}

TEST_CASE("rank_by_score head equals pooled select_best") {
  std::mt19937_64 gen(12);
  const EnsembleWeights w;
  for (const auto& log : random_logs(gen, 200)) {
    const std::set<std::string> ls{kBackends[gen() % 4]};
    auto scorer = [&](const Candidate& c) { return score_autometsl(c, ls, w); };
    const auto ranked = rank_by_score(log.records, scorer, 5);
    const auto best = select_best(log.records, scorer, true, 5);
    CHECK(ranked.front().word == best.word);
    CHECK(ranked.front().backend_id == best.backend_id);
    std::set<std::string> words;
    for (const auto& r : ranked) CHECK(words.insert(r.word).second);
  }
}

TEST_CASE("majority vote") {
  Rng rng(1);
  CHECK(majority_vote({list("x", {"a", "b"}), list("y", {"a", "c"}), list("z", {"d"})}, rng) == "a");
  CHECK(majority_vote({list("x", {"solo", "b"})}, rng, 1) == "solo");
  Rng r1(7), r2(7);
  const std::vector<SuggestionList> tie{list("x", {"p"}), list("y", {"q"})};
  CHECK(majority_vote(tie, r1) == majority_vote(tie, r2));
  CHECK_THROWS_AS(majority_vote({list("x", {}), list("y", {})}, rng), ValidationError);
  CHECK_THROWS_AS(majority_vote({}, rng), ValidationError);

  // Ties are broken uniformly: each of three tied words wins about a third.
  std::map<std::string, int> wins;
  const std::vector<SuggestionList> three{list("x", {"p"}), list("y", {"q"}), list("z", {"r"})};
  for (int s = 0; s < 3000; ++s) {
    Rng r(static_cast<std::uint64_t>(s));
    ++wins[majority_vote(three, r)];
  }
  for (const auto& [w, n] : wins) {
    CHECK(n > 850);
    CHECK(n < 1150);
  }
  // Pool size limits which words count.
  CHECK(majority_vote({list("x", {"a", "z"}), list("y", {"b", "z"})}, rng, 2) == "z");
}

TEST_CASE("majority vote agrees with a brute-force count") {
  std::mt19937_64 gen(3);
  for (const auto& log : random_logs(gen, 300)) {
    std::map<std::string, int> count;
    for (const auto& r : log.records)
      for (std::size_t i = 0; i < 5; ++i) ++count[r.items[i].word];
    int top = 0;
    for (const auto& [w, n] : count) top = std::max(top, n);
    Rng rng(gen());
    const auto w = majority_vote(log.records, rng);
    CHECK(count[w] == top);
    const auto ranked = [&] {
      Rng r2(1);
      return rank_by_votes(log.records, 5, r2);
    }();
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].count >= ranked[i].count);
    CHECK(ranked.size() == count.size());
  }
}

TEST_CASE("selector datasets") {
  const std::vector<std::string> ids{"t1", "t2", "t3"};
  const std::vector<std::vector<bool>> c{{true, false, true, true}, {false, true, false, false},
                                         {false, false, false, false}};
  const auto ml = build_selector_dataset(ids, c, SelectorMode::multilabel, 1);
  REQUIRE(ml.size() == 3);
  CHECK(format_labels(ml[0].labels) == "1 0 1 1");
  CHECK(format_labels(ml[2].labels) == "0 0 0 0");
  const auto fc = build_selector_dataset(ids, c, SelectorMode::four_class, 1);
  REQUIRE(fc.size() == 2);
  CHECK(fc[1].task_id == "t2");
  CHECK(fc[1].class_index == 1u);
  CHECK(c[0][*fc[0].class_index]);
  CHECK(build_selector_dataset(ids, c, SelectorMode::four_class, 1)[0].class_index == fc[0].class_index);
  CHECK_THROWS_AS(build_selector_dataset({"x"}, c, SelectorMode::multilabel, 1), ValidationError);

  // Multiple correct backends: the class is uniform among them.
  std::vector<std::string> many;
  std::vector<std::vector<bool>> rows;
  for (int i = 0; i < 3000; ++i) {
    many.push_back("m" + std::to_string(i));
    rows.push_back({true, false, true, true});
  }
  std::map<std::size_t, int> counts;
  for (const auto& l : build_selector_dataset(many, rows, SelectorMode::four_class, 4)) ++counts[*l.class_index];
  CHECK(counts.size() == 3);
  for (const auto& [k, n] : counts) {
    CHECK(k != 1);
    CHECK(n > 850);
    CHECK(n < 1150);
  }
}

TEST_CASE("upper bound") {
  CHECK(upper_bound({{true, false, false, false}, {false, false, false, false}}) == 0.5);
  CHECK(upper_bound({{false, false}, {false, false}}) == 0.0);
  CHECK_THROWS_AS(upper_bound({}), ValidationError);
}

TEST_CASE("upper bound dominates backends and top-1 strategies") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto logs = random_logs(gen, 100);
    const double ub = upper_bound(top1_correctness(logs));
    for (std::size_t b = 0; b < kBackends.size(); ++b) CHECK(ub >= backend_accuracy(logs, b));
    const OracleClassSelector cs(logs);
    const OracleLabelSetSelector ls(logs);
    StrategyInputs in;
    in.class_selector = &cs;
    in.label_selector = &ls;
    in.seed = 3;
    for (auto s : {Strategy::four_cc, Strategy::autometsl})
      CHECK(ub >= accuracy(logs, run_strategy(logs, s, in)));
    CHECK(accuracy(logs, run_strategy(logs, Strategy::upper_bound, in)) == doctest::Approx(ub));
  }
}

TEST_CASE("oracle label sets make AutoMeTS reach the upper bound when confidence spread is small") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    // beta * P spread = 0.5 * 0.24 < 0.125 = sigma * bonus
    const auto logs = random_logs(gen, 1000, 0.3, 0.24);
    const OracleLabelSetSelector ls(logs);
    StrategyInputs in;
    in.label_selector = &ls;
    const double acc = accuracy(logs, run_strategy(logs, Strategy::autometsl, in));
    double best = 0;
    for (std::size_t b = 0; b < kBackends.size(); ++b) best = std::max(best, backend_accuracy(logs, b));
    CHECK(acc >= best);
    CHECK(acc == doctest::Approx(upper_bound(top1_correctness(logs))));
  }
}

TEST_CASE("log assembly") {
  std::vector<autocomplete::PredictionTask> tasks{{"t1", {}, {"a"}, "b", 1}, {"t2", {}, {"a"}, "c", 1}};
  std::vector<backends::PredictionRecord> preds{
      {"t1", "bert", 2, "x", 0.1}, {"t1", "bert", 1, "b", 0.5}, {"t1", "gpt2", 1, "q", 0.4}, {"t2", "gpt2", 1, "c", 0.9}};
  const auto logs = assemble_logs(tasks, preds);
  REQUIRE(logs.size() == 2);
  CHECK(log_backend_ids(logs) == std::vector<std::string>{"bert", "gpt2"});
  CHECK(logs[0].records[0].items == std::vector<Suggestion>{{"b", 0.5}, {"x", 0.1}});
  CHECK(logs[1].records[0].items.empty());
  const auto c = top1_correctness(logs);
  CHECK(c == std::vector<std::vector<bool>>{{true, false}, {false, true}});

  const auto ordered = assemble_logs(tasks, preds, {"gpt2"});
  CHECK(log_backend_ids(ordered) == std::vector<std::string>{"gpt2"});
  preds.push_back({"t9", "bert", 1, "z", 0.1});
  CHECK_THROWS_AS(assemble_logs(tasks, preds), ValidationError);
  tasks.push_back(tasks[0]);
  CHECK_THROWS_AS(assemble_logs(tasks, {}), ValidationError);
}

TEST_CASE("strategies over a log") {
  std::vector<TaskLog> logs(1);
  logs[0].task = {"t", {"d"}, {"a"}, "gold", 1};
  logs[0].records = {list("roberta", {"x", "y"}, 0.6), list("bert", {"gold", "y"}, 0.5),
                     list("xlnet", {"y", "x"}, 0.4), list("gpt2", {"y"}, 0.3)};
  const OracleClassSelector cs(logs);
  const OracleLabelSetSelector ls(logs);
  CHECK(cs.predict(logs[0].task) == std::optional<std::string>("bert"));
  CHECK(ls.predict(logs[0].task) == std::set<std::string>{"bert"});
  StrategyInputs in;
  in.class_selector = &cs;
  in.label_selector = &ls;
  // 4CC: roberta 0.3, bert 0.25 + 0.5 -> bert.
  CHECK(run_strategy(logs, Strategy::four_cc, in)[0].word == "gold");
  // AutoMeTS: roberta 0.3, bert 0.25 + 0.125 -> bert.
  CHECK(run_strategy(logs, Strategy::autometsl, in)[0].backend_id == "bert");
  // Majority: y appears in all four pools.
  CHECK(run_strategy(logs, Strategy::majority, in)[0].word == "y");
  CHECK(run_strategy(logs, Strategy::upper_bound, in)[0].word == "gold");
  CHECK_THROWS_AS(run_strategy(logs, Strategy::four_cc, StrategyInputs{}), ValidationError);
  for (auto s : {Strategy::majority, Strategy::four_cc, Strategy::autometsl, Strategy::upper_bound})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(strategy_from_string("mean"), ValidationError);
}

TEST_CASE("trained selectors learn a feature-determined pattern") {
  // bert is right on position-1 tasks, gpt2 on later ones.
  std::vector<autocomplete::PredictionTask> tasks;
  std::vector<std::string> ids;
  std::vector<std::vector<bool>> correct;
  for (int i = 0; i < 60; ++i) {
    const std::size_t pos = 1 + static_cast<std::size_t>(i % 3);
    tasks.push_back({"t" + std::to_string(i), {"d"}, std::vector<std::string>(pos, "w"), "g", pos});
    ids.push_back(tasks.back().task_id);
    correct.push_back({false, pos == 1, false, pos != 1});
  }
  const auto fc = build_selector_dataset(ids, correct, SelectorMode::four_class, 1);
  const auto ml = build_selector_dataset(ids, correct, SelectorMode::multilabel, 1);
  const auto cls = NaiveBayesClassSelector::train(tasks, fc, kBackends);
  const auto lab = NaiveBayesLabelSetSelector::train(tasks, ml, kBackends);
  CHECK(cls.predict(tasks[0]) == std::optional<std::string>("bert"));
  CHECK(cls.predict(tasks[1]) == std::optional<std::string>("gpt2"));
  CHECK(lab.predict(tasks[0]) == std::set<std::string>{"bert"});
  CHECK(lab.predict(tasks[2]) == std::set<std::string>{"gpt2"});
  const auto cls2 = NaiveBayesClassSelector::from_json(cls.to_json());
  const auto lab2 = NaiveBayesLabelSetSelector::from_json(lab.to_json());
  for (const auto& t : tasks) {
    CHECK(cls2.predict(t) == cls.predict(t));
    CHECK(lab2.predict(t) == lab.predict(t));
  }
}
