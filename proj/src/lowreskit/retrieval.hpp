#pragma once

#include <map>
#include <string>
#include <vector>

#include "lowreskit/records.hpp"

/// Document reranking from reader span scores, and document retrieval accuracy.
namespace lowreskit::retrieval {

struct SpanScore {
  std::string question_id;
  std::string doc_id;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  double score = 0.0;  // opaque comparable real; higher is better
};

struct DocScore {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const DocScore&) const = default;
};

struct RetrievalResult {
  std::string question_id;
  std::vector<DocScore> ranked_docs;  // empty = reader gave a no-answer verdict
  std::size_t kept_k = 0;
};

/// Max span score per document, sorted descending; ties keep first appearance.
std::vector<DocScore> score_documents(const std::vector<SpanScore>& spans);

RetrievalResult keep_top_k(std::string question_id, const std::vector<DocScore>& ranked, std::size_t k);

struct DraReport {
  double value = 0.0;
  std::size_t evaluated = 0;
  /// Questions without a gold document (or with empty rankings) were skipped.
  std::vector<std::string> excluded;
};

/// Fraction of answerable questions whose gold document is ranked within the top n.
DraReport dra_at(const std::vector<RetrievalResult>& results, const std::map<std::string, std::string>& gold,
                 std::size_t n);

/// Group span records by question (first-appearance order), score and keep top k.
std::vector<RetrievalResult> rerank(const std::vector<SpanScore>& spans, std::size_t k);

SpanScore span_from_json(const json& record);
json result_to_json(const RetrievalResult& result);
RetrievalResult result_from_json(const json& record);

}  // namespace lowreskit::retrieval
