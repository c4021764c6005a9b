#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lowreskit/autocomplete.hpp"
#include "lowreskit/records.hpp"

/// Shared metrics and cohort breakdowns.
namespace lowreskit::eval {

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::optional<std::string> cohort;
  std::size_t count = 0;

  bool operator==(const MetricReport&) const = default;
};

json report_to_json(const MetricReport& r);

/// Exact-token-match rate. Lengths must agree.
double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds);

/// Rate at which the gold token appears among the first n ranked predictions.
double accuracy_at_n(const std::vector<std::vector<std::string>>& ranked, const std::vector<std::string>& golds,
                     std::size_t n);

/// Half-open character interval; start == end is an empty (no-answer) span.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end > start ? end - start : 0; }
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Overlap-based P/R/F1. Both empty scores 1; exactly one empty scores 0.
PRF char_overlap_f1(const CharSpan& pred, const CharSpan& gold);

/// Lowercase, collapse whitespace, strip punctuation around the string.
std::string normalize_answer(std::string_view text);

struct F1EM {
  double f1 = 0.0;
  double em = 0.0;
};

/// Bag-of-tokens F1 and exact match over normalized strings.
F1EM token_f1_em(std::string_view pred, std::string_view gold);

/// Mean of per-item P, R and F1 (macro average over questions).
PRF macro_average(const std::vector<PRF>& items);

enum class Axis { difficult_length, prefix_length };

Axis axis_from_string(std::string_view name);

/// very_short (<= 5 tokens), short (6-15), medium (16-19), long (>= 20).
std::string length_bucket(std::size_t tokens);

/// Accuracy per cohort. `correct[i]` belongs to `tasks[i]`. Cohorts are the
/// four length buckets in fixed order, or one cohort per prefix length i in
/// ascending order; empty cohorts are omitted.
std::vector<MetricReport> breakdown(const std::vector<autocomplete::PredictionTask>& tasks,
                                    const std::vector<bool>& correct, Axis axis, const std::string& metric = "accuracy");

/// Plain-text table: metric, cohort, count, value.
std::string render_table(const std::vector<MetricReport>& reports);

}  // namespace lowreskit::eval
