#include "lowreskit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lowreskit/common.hpp"

namespace lowreskit::retrieval {

std::vector<DocScore> score_documents(const std::vector<SpanScore>& spans) {
  std::vector<DocScore> docs;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : spans) {
    if (!std::isfinite(s.score)) throw ValidationError("non-finite span score for doc " + s.doc_id);
    auto [it, inserted] = index.try_emplace(s.doc_id, docs.size());
    if (inserted) {
      docs.push_back({s.doc_id, s.score});
    } else {
      docs[it->second].score = std::max(docs[it->second].score, s.score);
    }
  }
  std::stable_sort(docs.begin(), docs.end(), [](const DocScore& a, const DocScore& b) { return a.score > b.score; });
  return docs;
}

RetrievalResult keep_top_k(std::string question_id, const std::vector<DocScore>& ranked, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  RetrievalResult result;
  result.question_id = std::move(question_id);
  result.kept_k = k;
  const std::size_t kept = std::min(k, ranked.size());
  result.ranked_docs.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(kept));
  return result;
}

DraReport dra_at(const std::vector<RetrievalResult>& results, const std::map<std::string, std::string>& gold,
                 std::size_t n) {
  if (n < 1) throw ValidationError("DRA@n requires n >= 1");
  DraReport report;
  std::size_t hits = 0;
  for (const auto& r : results) {
    auto g = gold.find(r.question_id);
    if (g == gold.end() || r.ranked_docs.empty()) {
      report.excluded.push_back(r.question_id);
      continue;
    }
    ++report.evaluated;
    const std::size_t limit = std::min(n, r.ranked_docs.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (r.ranked_docs[i].doc_id == g->second) {
        ++hits;
        break;
      }
    }
  }
  report.value = report.evaluated ? static_cast<double>(hits) / static_cast<double>(report.evaluated) : 0.0;
  return report;
}

std::vector<RetrievalResult> rerank(const std::vector<SpanScore>& spans, std::size_t k) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<SpanScore>> groups;
  for (const auto& s : spans) {
    auto [it, inserted] = groups.try_emplace(s.question_id);
    if (inserted) order.push_back(s.question_id);
    it->second.push_back(s);
  }
  std::vector<RetrievalResult> out;
  out.reserve(order.size());
  for (const auto& q : order) out.push_back(keep_top_k(q, score_documents(groups[q]), k));
  return out;
}

SpanScore span_from_json(const json& r) {
  SpanScore s;
  s.question_id = require<std::string>(r, "question_id");
  s.doc_id = require<std::string>(r, "doc_id");
  s.start_char = require<std::size_t>(r, "start_char");
  s.end_char = require<std::size_t>(r, "end_char");
  s.score = require<double>(r, "score");
  if (s.start_char > s.end_char) throw ValidationError("span start after end for question " + s.question_id);
  return s;
}

json result_to_json(const RetrievalResult& r) {
  json docs = json::array();
  for (const auto& d : r.ranked_docs) docs.push_back({{"doc_id", d.doc_id}, {"score", d.score}});
  return {{"question_id", r.question_id}, {"ranked_docs", docs}, {"kept_k", r.kept_k}};
}

RetrievalResult result_from_json(const json& r) {
  RetrievalResult out;
  out.question_id = require<std::string>(r, "question_id");
  out.kept_k = optional_field<std::size_t>(r, "kept_k", 0);
  for (const auto& d : require<json>(r, "ranked_docs")) {
    out.ranked_docs.push_back({require<std::string>(d, "doc_id"), require<double>(d, "score")});
  }
  return out;
}

}  // namespace lowreskit::retrieval
