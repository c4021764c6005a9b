#include "lowreskit/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "lowreskit/common.hpp"

namespace lowreskit::eval {

json report_to_json(const MetricReport& r) {
  json j{{"metric", r.metric}, {"value", r.value}, {"count", r.count}};
  j["cohort"] = r.cohort ? json(*r.cohort) : json(nullptr);
  return j;
}

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) throw ValidationError("accuracy: prediction and gold lists differ in length");
  if (golds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

double accuracy_at_n(const std::vector<std::vector<std::string>>& ranked, const std::vector<std::string>& golds,
                     std::size_t n) {
  if (n < 1) throw ValidationError("accuracy@n requires n >= 1");
  if (ranked.size() != golds.size()) throw ValidationError("accuracy@n: prediction and gold lists differ in length");
  if (golds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto end = ranked[i].begin() + static_cast<std::ptrdiff_t>(std::min(n, ranked[i].size()));
    hits += std::find(ranked[i].begin(), end, golds[i]) != end;
  }
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

PRF char_overlap_f1(const CharSpan& pred, const CharSpan& gold) {
  const auto lp = pred.length();
  const auto lg = gold.length();
  if (lp == 0 && lg == 0) return {1.0, 1.0, 1.0};
  if (lp == 0 || lg == 0) return {0.0, 0.0, 0.0};
  const auto lo = std::max(pred.start, gold.start);
  const auto hi = std::min(pred.end, gold.end);
  const double overlap = hi > lo ? static_cast<double>(hi - lo) : 0.0;
  if (overlap == 0.0) return {0.0, 0.0, 0.0};
  const double p = overlap / static_cast<double>(lp);
  const double r = overlap / static_cast<double>(lg);
  return {p, r, 2.0 * p * r / (p + r)};
}

std::string normalize_answer(std::string_view text) {
  auto s = to_lower(normalize_ws(text));
  static constexpr std::string_view kPunct = ".,;:!?\"'()[]{}-";
  std::size_t b = 0, e = s.size();
  while (b < e && kPunct.find(s[b]) != std::string_view::npos) ++b;
  while (e > b && kPunct.find(s[e - 1]) != std::string_view::npos) --e;
  return normalize_ws(s.substr(b, e - b));
}

F1EM token_f1_em(std::string_view pred, std::string_view gold) {
  const auto np = normalize_answer(pred);
  const auto ng = normalize_answer(gold);
  F1EM out;
  out.em = np == ng ? 1.0 : 0.0;
  const auto tp = split_ws(np);
  const auto tg = split_ws(ng);
  if (tp.empty() || tg.empty()) {
    out.f1 = tp.empty() && tg.empty() ? 1.0 : 0.0;
    return out;
  }
  std::map<std::string, int> gold_counts;
  for (const auto& t : tg) ++gold_counts[t];
  int common = 0;
  for (const auto& t : tp) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return out;
  const double p = static_cast<double>(common) / static_cast<double>(tp.size());
  const double r = static_cast<double>(common) / static_cast<double>(tg.size());
  out.f1 = 2.0 * p * r / (p + r);
  return out;
}

PRF macro_average(const std::vector<PRF>& items) {
  PRF out;
  if (items.empty()) return out;
  for (const auto& i : items) {
    out.precision += i.precision;
    out.recall += i.recall;
    out.f1 += i.f1;
  }
  const double n = static_cast<double>(items.size());
  return {out.precision / n, out.recall / n, out.f1 / n};
}

Axis axis_from_string(std::string_view name) {
  if (name == "difficult_length" || name == "difficult-length") return Axis::difficult_length;
  if (name == "prefix_length" || name == "prefix-length") return Axis::prefix_length;
  throw ValidationError("unknown breakdown axis '" + std::string(name) + "'");
}

std::string length_bucket(std::size_t tokens) {
  if (tokens <= 5) return "very_short";
  if (tokens <= 15) return "short";
  if (tokens <= 19) return "medium";
  return "long";
}

std::vector<MetricReport> breakdown(const std::vector<autocomplete::PredictionTask>& tasks,
                                    const std::vector<bool>& correct, Axis axis, const std::string& metric) {
  if (tasks.size() != correct.size()) throw ValidationError("breakdown: tasks and outcomes differ in length");
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> cells;  // key -> (hits, count)
  std::map<std::size_t, std::string> names;
  static const std::vector<std::string> kBuckets{"very_short", "short", "medium", "long"};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::size_t key;
    if (axis == Axis::difficult_length) {
      const auto b = length_bucket(tasks[i].difficult_tokens.size());
      key = static_cast<std::size_t>(std::find(kBuckets.begin(), kBuckets.end(), b) - kBuckets.begin());
      names[key] = b;
    } else {
      key = tasks[i].position;
      names[key] = "i=" + std::to_string(key);
    }
    auto& cell = cells[key];
    cell.first += correct[i];
    ++cell.second;
  }
  std::vector<MetricReport> out;
  for (const auto& [key, cell] : cells) {
    out.push_back({metric, static_cast<double>(cell.first) / static_cast<double>(cell.second), names[key], cell.second});
  }
  return out;
}

std::string render_table(const std::vector<MetricReport>& reports) {
  std::size_t mw = 6, cw = 6;
  for (const auto& r : reports) {
    mw = std::max(mw, r.metric.size());
    cw = std::max(cw, r.cohort.value_or("all").size());
  }
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %-*s  %7s  %8s\n", static_cast<int>(mw), "metric", static_cast<int>(cw),
                "cohort", "count", "value");
  std::string out = line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-*s  %-*s  %7zu  %8.4f\n", static_cast<int>(mw), r.metric.c_str(),
                  static_cast<int>(cw), r.cohort.value_or("all").c_str(), r.count, r.value);
    out += line;
  }
  return out;
}

}  // namespace lowreskit::eval
