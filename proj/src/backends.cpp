#include "lowreskit/backends.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "httplib.h"
#include "lowreskit/common.hpp"

namespace lowreskit::backends {

void FineTunePlan::validate() const {
  if (batch_size <= 0 || epochs <= 0 || !(learning_rate > 0.0) || early_stop_decreases <= 0) {
    throw ValidationError("fine-tune hyperparameters must be positive");
  }
  stages.validate();
}

bool EarlyStopper::observe(double dev_accuracy) {
  if (has_last_ && dev_accuracy < last_) ++decreases_;
  has_last_ = true;
  last_ = dev_accuracy;
  return decreases_ >= limit_;
}

void rank_suggestions(std::vector<Suggestion>& items, std::size_t top_n) {
  std::sort(items.begin(), items.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.word < b.word;
  });
  if (items.size() > top_n) items.resize(top_n);
}

namespace {

bool is_special(const std::string& tok) {
  return tok == kMask || tok == kSep || tok == kStart;
}

struct ParsedInput {
  std::vector<std::string> context;
  std::vector<std::string> prefix;
  bool has_context = false;
};

ParsedInput parse_input(const std::vector<std::string>& input) {
  if (input.empty() || input.back() != kMask) throw ValidationError("model input must end with the mask sentinel");
  ParsedInput p;
  auto sep = std::find(input.rbegin(), input.rend(), std::string(kSep));
  auto prefix_begin = input.begin();
  if (sep != input.rend()) {
    p.has_context = true;
    const auto sep_it = sep.base() - 1;
    p.context.assign(input.begin(), sep_it);
    prefix_begin = sep_it + 1;
  }
  p.prefix.assign(prefix_begin, input.end() - 1);
  return p;
}

}  // namespace

ReferenceBackend::ReferenceBackend(std::string id, ReferenceWeights weights)
    : id_(std::move(id)), weights_(weights) {
  if (weights_.bigram < 0 || weights_.unigram < 0 || weights_.context < 0 ||
      weights_.bigram + weights_.unigram <= 0.0) {
    throw ValidationError("reference backend weights must be non-negative with bigram + unigram > 0");
  }
}

void ReferenceBackend::observe(const std::vector<std::string>& sentence) {
  std::string history(kStart);
  auto add = [&](const std::string& w) {
    ++unigrams_[w];
    ++total_;
    ++bigrams_[history][w];
    ++history_totals_[history];
    history = w;
  };
  for (const auto& w : sentence) {
    if (is_special(w) || w == kEnd) continue;
    add(w);
  }
  if (!sentence.empty()) add(std::string(kEnd));
}

void ReferenceBackend::observe_text(std::string_view sentence) { observe(split_ws(sentence)); }

std::uint64_t ReferenceBackend::unigram_count(const std::string& word) const {
  auto it = unigrams_.find(word);
  return it == unigrams_.end() ? 0 : it->second;
}

std::uint64_t ReferenceBackend::bigram_count(const std::string& history, const std::string& word) const {
  auto h = bigrams_.find(history);
  if (h == bigrams_.end()) return 0;
  auto it = h->second.find(word);
  return it == h->second.end() ? 0 : it->second;
}

SuggestionList ReferenceBackend::predict_next(const std::vector<std::string>& input, std::size_t top_n) {
  if (top_n < 1) throw ValidationError("top_n must be >= 1");
  const auto parsed = parse_input(input);

  std::map<std::string, std::uint64_t> context_counts;
  std::uint64_t context_total = 0;
  for (const auto& w : parsed.context) {
    if (is_special(w) || w == kEnd) continue;
    ++context_counts[w];
    ++context_total;
  }
  std::set<std::string> vocab;
  for (const auto& [w, _] : unigrams_) vocab.insert(w);
  for (const auto& [w, _] : context_counts) vocab.insert(w);

  SuggestionList out;
  out.model_id = id_;
  if (vocab.empty()) return out;
  const double v = static_cast<double>(vocab.size());

  const std::string history = parsed.prefix.empty() ? std::string(kStart) : parsed.prefix.back();
  auto hist_total = history_totals_.find(history);
  if (hist_total == history_totals_.end()) {
    for (const auto& w : vocab) out.items.push_back({w, 1.0 / v});
    rank_suggestions(out.items, top_n);
    return out;
  }

  double wb = weights_.bigram;
  double wu = weights_.unigram;
  double wc = 0.0;
  if (parsed.has_context && weights_.context > 0.0) {
    const double z = wb + wu + weights_.context;
    wb /= z;
    wu /= z;
    wc = weights_.context / z;
  } else {
    const double z = wb + wu;
    wb /= z;
    wu /= z;
  }

  const double h_total = static_cast<double>(hist_total->second);
  const auto& row = bigrams_.at(history);
  const double n_total = static_cast<double>(total_);
  const double c_total = static_cast<double>(context_total);
  out.items.reserve(vocab.size());
  for (const auto& w : vocab) {
    auto b = row.find(w);
    const double cb = b == row.end() ? 0.0 : static_cast<double>(b->second);
    auto u = unigrams_.find(w);
    const double cu = u == unigrams_.end() ? 0.0 : static_cast<double>(u->second);
    double p = wb * ((cb + 1.0) / (h_total + v)) + wu * ((cu + 1.0) / (n_total + v));
    if (wc > 0.0) {
      auto c = context_counts.find(w);
      const double cc = c == context_counts.end() ? 0.0 : static_cast<double>(c->second);
      p += wc * ((cc + 1.0) / (c_total + v));
    }
    out.items.push_back({w, p});
  }
  rank_suggestions(out.items, top_n);
  return out;
}

std::vector<std::string> load_sentences(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  std::vector<std::string> sentences;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    for (const auto& r : parse_ndjson(text)) sentences.push_back(require<std::string>(r, "simple"));
    return sentences;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    auto line = normalize_ws(std::string_view(text).substr(pos, end - pos));
    if (!line.empty()) sentences.push_back(std::move(line));
    pos = end + 1;
  }
  return sentences;
}

std::unique_ptr<Backend> ReferenceBackend::fine_tune(const FineTunePlan& plan) const {
  plan.validate();
  // Load every stage's data up front so a missing dataset fails before training.
  std::vector<std::vector<std::vector<std::string>>> stage_data;
  for (const auto& stage : plan.stages.stages) {
    auto& data = stage_data.emplace_back();
    for (const auto& ds : stage.datasets) {
      if (ds.path.empty() || !std::filesystem::exists(ds.path)) {
        throw ValidationError("stage '" + stage.name + "': dataset '" + ds.name + "' not found at '" + ds.path + "'");
      }
      for (const auto& s : load_sentences(ds.path)) data.push_back(split_ws(s));
    }
  }
  std::map<std::string, ReferenceBackend> trained;
  ReferenceBackend current = *this;
  for (std::size_t i = 0; i < plan.stages.stages.size(); ++i) {
    const auto& stage = plan.stages.stages[i];
    current = stage.init_from.empty() ? *this : trained.at(stage.init_from);
    // Counting is order-independent; epochs do not repeat the data.
    for (const auto& sentence : stage_data[i]) current.observe(sentence);
    trained.insert_or_assign(stage.name, current);
  }
  return std::make_unique<ReferenceBackend>(std::move(current));
}

RemoteBackend::RemoteBackend(std::string id, std::string base_url, Capabilities caps, double timeout_s)
    : id_(std::move(id)), base_url_(std::move(base_url)), caps_(caps), timeout_s_(timeout_s) {}

namespace {

httplib::Client make_client(const std::string& base_url, double timeout_s) {
  httplib::Client client(base_url);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  return client;
}

}  // namespace

SuggestionList RemoteBackend::predict_next(const std::vector<std::string>& input, std::size_t top_n) {
  if (top_n < 1) throw ValidationError("top_n must be >= 1");
  parse_input(input);
  auto client = make_client(base_url_, timeout_s_);
  const json request{{"backend_id", id_}, {"tokens", input}, {"top_n", top_n}};
  auto res = client.Post("/v1/predict", request.dump(), "application/json");
  if (!res) throw BackendUnavailable(id_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendUnavailable(id_ + ": adapter returned HTTP " + std::to_string(res->status));
  SuggestionList out;
  out.model_id = id_;
  try {
    const auto body = json::parse(res->body);
    for (const auto& s : require<json>(body, "suggestions")) {
      const auto p = require<double>(s, "probability");
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probability outside [0,1]");
      out.items.push_back({require<std::string>(s, "word"), p});
    }
  } catch (const std::exception& e) {
    throw BackendUnavailable(id_ + ": malformed adapter response: " + e.what());
  }
  rank_suggestions(out.items, top_n);
  return out;
}

std::unique_ptr<Backend> RemoteBackend::fine_tune(const FineTunePlan& plan) const {
  plan.validate();
  auto client = make_client(base_url_, timeout_s_);
  const json request{{"backend_id", id_},
                     {"batch_size", plan.batch_size},
                     {"epochs", plan.epochs},
                     {"learning_rate", plan.learning_rate},
                     {"early_stop_decreases", plan.early_stop_decreases},
                     {"plan", json::parse(plan.stages.serialize())}};
  auto res = client.Post("/v1/fine_tune", request.dump(), "application/json");
  if (!res) throw BackendUnavailable(id_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendUnavailable(id_ + ": adapter returned HTTP " + std::to_string(res->status));
  std::string tuned_id;
  try {
    tuned_id = require<std::string>(json::parse(res->body), "backend_id");
  } catch (const std::exception& e) {
    throw BackendUnavailable(id_ + ": malformed fine-tune response: " + e.what());
  }
  return std::make_unique<RemoteBackend>(tuned_id, base_url_, caps_, timeout_s_);
}

void BackendRegistry::add(std::unique_ptr<Backend> backend) {
  if (!backend) throw ValidationError("null backend");
  if (contains(backend->id())) throw ValidationError("duplicate backend id '" + backend->id() + "'");
  entries_.push_back({std::move(backend), std::make_unique<std::mutex>()});
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.backend->id());
  return out;
}

bool BackendRegistry::contains(const std::string& id) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.backend->id() == id; });
}

Backend& BackendRegistry::get(const std::string& id) {
  for (auto& e : entries_) {
    if (e.backend->id() == id) return *e.backend;
  }
  throw ValidationError("unknown backend '" + id + "'");
}

SuggestionList BackendRegistry::predict(const std::string& id, const std::vector<std::string>& input,
                                        std::size_t top_n) {
  for (auto& e : entries_) {
    if (e.backend->id() == id) {
      std::lock_guard lock(*e.lock);
      return e.backend->predict_next(input, top_n);
    }
  }
  throw ValidationError("unknown backend '" + id + "'");
}

std::vector<json> suggestion_records(const std::string& task_id, const SuggestionList& list) {
  std::vector<json> out;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    out.push_back({{"task_id", task_id},
                   {"backend_id", list.model_id},
                   {"rank", i + 1},
                   {"word", list.items[i].word},
                   {"probability", list.items[i].probability}});
  }
  return out;
}

PredictionRecord prediction_from_json(const json& r) {
  PredictionRecord p;
  p.task_id = require<std::string>(r, "task_id");
  p.backend_id = require<std::string>(r, "backend_id");
  p.rank = require<std::size_t>(r, "rank");
  p.word = require<std::string>(r, "word");
  p.probability = require<double>(r, "probability");
  if (p.rank < 1) throw ValidationError("prediction rank must be >= 1");
  if (!(p.probability >= 0.0 && p.probability <= 1.0)) throw ValidationError("prediction probability outside [0,1]");
  return p;
}

}  // namespace lowreskit::backends
