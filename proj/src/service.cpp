#include "lowreskit/service.hpp"

#include <algorithm>
#include <fstream>

#include "httplib.h"
#include "lowreskit/autocomplete.hpp"
#include "lowreskit/common.hpp"

namespace lowreskit::service {

namespace fs = std::filesystem;

EventKind event_kind_from_string(std::string_view name) {
  if (name == "suggest_shown") return EventKind::suggest_shown;
  if (name == "accepted") return EventKind::accepted;
  if (name == "overridden") return EventKind::overridden;
  if (name == "finished") return EventKind::finished;
  throw ValidationError("unknown session event '" + std::string(name) + "'");
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::suggest_shown: return "suggest_shown";
    case EventKind::accepted: return "accepted";
    case EventKind::overridden: return "overridden";
    case EventKind::finished: return "finished";
  }
  return "";
}

namespace {

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  }) && id != "." && id != "..";
}

}  // namespace

SessionEvent event_from_json(const json& body) {
  if (!body.is_object()) throw ValidationError("event must be an object");
  SessionEvent e;
  e.session_id = require<std::string>(body, "session_id");
  if (!valid_session_id(e.session_id)) throw ValidationError("session_id must be 1-128 of [A-Za-z0-9._-]");
  e.event = event_kind_from_string(require<std::string>(body, "event"));
  e.payload = require<json>(body, "payload");
  if (!e.payload.is_object()) throw ValidationError("payload must be an object");
  auto ts = e.payload.find("timestamp");
  if (ts == e.payload.end() || !ts->is_number()) throw ValidationError("payload.timestamp must be a number");
  if (e.event == EventKind::accepted || e.event == EventKind::overridden) {
    auto w = e.payload.find("word");
    if (w == e.payload.end() || !w->is_string() || w->get<std::string>().empty()) {
      throw ValidationError("payload.word must be a non-empty string");
    }
  }
  auto rank = e.payload.find("rank");
  if (e.event == EventKind::accepted) {
    if (rank == e.payload.end() || !rank->is_number_integer() || rank->get<long long>() < 1) {
      throw ValidationError("accepted events need payload.rank >= 1");
    }
  } else if (rank != e.payload.end() && !rank->is_null() &&
             !(rank->is_number_integer() && rank->get<long long>() >= 1)) {
    throw ValidationError("payload.rank must be null or >= 1");
  }
  if (auto id = body.find("event_id"); id != body.end() && !id->is_null()) {
    if (!id->is_string()) throw ValidationError("event_id must be a string");
    e.event_id = id->get<std::string>();
  }
  return e;
}

json event_to_json(const SessionEvent& e, std::uint64_t seq) {
  json j{{"seq", seq}, {"session_id", e.session_id}, {"event", to_string(e.event)}, {"payload", e.payload}};
  if (e.event_id) j["event_id"] = *e.event_id;
  return j;
}

SessionStore::SessionStore(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) load();
}

std::string SessionStore::dedupe_key(const SessionEvent& e) {
  if (e.event_id) return "id:" + *e.event_id;
  return "ev:" + to_string(e.event) + ":" + e.payload.dump();
}

void SessionStore::load() {
  if (!fs::exists(dir_)) return;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() == ".ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    for (const auto& r : read_ndjson(f)) {
      auto e = event_from_json(r);
      const auto seq = require<std::uint64_t>(r, "seq");
      auto& s = sessions_[e.session_id];
      const auto key = dedupe_key(e);
      s.seen.emplace(key, seq);
      s.finished = s.finished || e.event == EventKind::finished;
      s.events.push_back({std::move(e), seq, key});
      seq_ = std::max(seq_, seq);
    }
  }
}

SessionStore::Ack SessionStore::append(const SessionEvent& event) {
  std::lock_guard lock(mu_);
  const auto key = dedupe_key(event);
  auto it = sessions_.find(event.session_id);
  if (it != sessions_.end()) {
    if (auto seen = it->second.seen.find(key); seen != it->second.seen.end()) {
      return {event.session_id, seen->second, true};
    }
    if (it->second.finished) throw Conflict("session " + event.session_id + " is finished");
    if (!it->second.events.empty() && event.timestamp() < it->second.events.back().event.timestamp()) {
      throw Conflict("event timestamp precedes the session's last event");
    }
  } else if (event.event == EventKind::finished) {
    throw Conflict("session " + event.session_id + " does not exist");
  }

  const auto seq = seq_ + 1;
  if (!dir_.empty()) {
    fs::create_directories(dir_);
    const auto line = event_to_json(event, seq).dump() + "\n";
    std::ofstream f(fs::path(dir_) / (event.session_id + ".ndjson"), std::ios::app | std::ios::binary);
    f.write(line.data(), static_cast<std::streamsize>(line.size()));
    f.flush();
    if (!f) throw IoError("cannot append to session log for " + event.session_id);
  }
  seq_ = seq;
  auto& s = sessions_[event.session_id];
  s.seen.emplace(key, seq);
  s.finished = event.event == EventKind::finished;
  s.events.push_back({event, seq, key});
  return {event.session_id, seq, false};
}

std::vector<SessionEvent> SessionStore::events(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  std::vector<SessionEvent> out;
  if (auto it = sessions_.find(session_id); it != sessions_.end()) {
    for (const auto& s : it->second.events) out.push_back(s.event);
  }
  return out;
}

bool SessionStore::contains(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return sessions_.count(session_id) > 0;
}

std::vector<std::string> reconstruct_sentence(const std::vector<SessionEvent>& events) {
  std::vector<std::string> out;
  for (const auto& e : events) {
    if (e.event == EventKind::finished) break;
    if (e.event == EventKind::accepted || e.event == EventKind::overridden) {
      out.push_back(e.payload.at("word").get<std::string>());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Response error_response(const std::exception& e) {
  int status = 500;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    status = 400;
  } else if (dynamic_cast<const Conflict*>(&e)) {
    status = 409;
  } else if (dynamic_cast<const backends::BackendUnavailable*>(&e)) {
    status = 503;
  }
  return {status, json{{"error", e.what()}}};
}

SuggestService::SuggestService(Config cfg, backends::BackendRegistry registry)
    : cfg_(std::move(cfg)), registry_(std::move(registry)), store_(cfg_.session_dir) {
  if (registry_.size() == 0) throw ValidationError("service needs at least one backend");
  if (!cfg_.selectors.empty()) {
    const auto j = json::parse(read_text_file(cfg_.selectors));
    class_selector_ = std::make_shared<ensemble::NaiveBayesClassSelector>(
        ensemble::NaiveBayesClassSelector::from_json(require<json>(j, "four_class")));
    label_selector_ = std::make_shared<ensemble::NaiveBayesLabelSetSelector>(
        ensemble::NaiveBayesLabelSetSelector::from_json(require<json>(j, "multilabel")));
  }
}

void SuggestService::set_selectors(std::shared_ptr<const ensemble::ClassSelector> class_selector,
                                   std::shared_ptr<const ensemble::LabelSetSelector> label_selector) {
  class_selector_ = std::move(class_selector);
  label_selector_ = std::move(label_selector);
}

Response SuggestService::suggest(const json& body) {
  try {
    return {200, suggest_impl(body)};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

json SuggestService::suggest_impl(const json& body) {
  if (!body.is_object()) throw ValidationError("request must be an object");
  const auto difficult = require<std::string>(body, "difficult");
  const auto typed = optional_field<std::vector<std::string>>(body, "typed", {});
  const auto n_raw = optional_field<long long>(body, "n", 5);
  if (n_raw < 1 || n_raw > 10) throw ValidationError("n must be in 1..10");
  const auto n = static_cast<std::size_t>(n_raw);
  const auto strategy = optional_field<std::string>(body, "strategy", "majority");

  const auto difficult_tokens = split_ws(difficult);
  const auto input = autocomplete::build_model_input(difficult_tokens, typed, cfg_.context_mode);
  json warnings = json::array();
  json suggestions = json::array();

  if (strategy.rfind("single:", 0) == 0) {
    const auto id = strategy.substr(7);
    if (!registry_.contains(id)) throw ValidationError("unknown backend '" + id + "'");
    for (const auto& s : registry_.predict(id, input, n).items) {
      suggestions.push_back({{"word", s.word}, {"score", s.probability}, {"source_model", id}});
    }
    return {{"strategy", strategy}, {"suggestions", suggestions}, {"warnings", warnings}};
  }
  if (strategy != "majority" && strategy != "4cc" && strategy != "autometsl") {
    throw ValidationError("unknown strategy '" + strategy + "'");
  }

  const auto pool = std::max(n, cfg_.ensemble.pool_top_n);
  std::vector<backends::SuggestionList> lists;
  for (const auto& id : registry_.ids()) {
    try {
      lists.push_back(registry_.predict(id, input, pool));
    } catch (const backends::BackendUnavailable& e) {
      warnings.push_back("backend " + id + " unavailable: " + e.what());
    }
  }
  if (lists.empty()) throw backends::BackendUnavailable("all backends unavailable");

  if (strategy == "majority") {
    Rng rng(derive_seed(cfg_.seed, body.dump()));
    const auto votes = ensemble::rank_by_votes(lists, pool, rng);
    for (std::size_t i = 0; i < votes.size() && i < n; ++i) {
      std::string source;
      for (const auto& l : lists) {
        const auto end = l.items.begin() + static_cast<std::ptrdiff_t>(std::min(pool, l.items.size()));
        if (std::any_of(l.items.begin(), end, [&](const auto& s) { return s.word == votes[i].word; })) {
          source = l.model_id;
          break;
        }
      }
      suggestions.push_back({{"word", votes[i].word},
                             {"score", static_cast<double>(votes[i].count) / static_cast<double>(lists.size())},
                             {"source_model", source}});
    }
    return {{"strategy", strategy}, {"suggestions", suggestions}, {"warnings", warnings}};
  }

  autocomplete::PredictionTask task{"request", difficult_tokens, typed, "", typed.size()};
  ensemble::Scorer scorer;
  if (strategy == "4cc") {
    std::string selected;
    if (class_selector_) {
      selected = class_selector_->predict(task).value_or("");
    } else {
      warnings.push_back("no 4cc selector loaded; ranking by confidence only");
    }
    scorer = [&, selected](const ensemble::Candidate& c) { return ensemble::score_4cc(c, selected, cfg_.ensemble); };
  } else {
    std::set<std::string> label_set;
    if (label_selector_) {
      label_set = label_selector_->predict(task);
    } else {
      warnings.push_back("no multilabel selector loaded; ranking by confidence only");
    }
    scorer = [&, label_set](const ensemble::Candidate& c) {
      return ensemble::score_autometsl(c, label_set, cfg_.ensemble);
    };
  }
  const auto ranked = ensemble::rank_by_score(lists, scorer, pool);
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) {
    suggestions.push_back({{"word", ranked[i].word}, {"score", ranked[i].score}, {"source_model", ranked[i].backend_id}});
  }
  return {{"strategy", strategy}, {"suggestions", suggestions}, {"warnings", warnings}};
}

Response SuggestService::log_event(const json& body) {
  try {
    const auto ack = store_.append(event_from_json(body));
    return {200, json{{"session_id", ack.session_id}, {"seq", ack.seq}}};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

Response SuggestService::session(const std::string& session_id) const {
  if (!store_.contains(session_id)) return {404, json{{"error", "unknown session '" + session_id + "'"}}};
  const auto events = store_.events(session_id);
  json list = json::array();
  for (const auto& e : events) list.push_back({{"event", to_string(e.event)}, {"payload", e.payload}});
  return {200, json{{"session_id", session_id}, {"events", list}, {"sentence", reconstruct_sentence(events)}}};
}

Response SuggestService::health() {
  json list = json::array();
  std::size_t up = 0;
  for (const auto& id : registry_.ids()) {
    bool available = true;
    std::string error;
    try {
      registry_.predict(id, {std::string(backends::kMask)}, 1);
    } catch (const std::exception& e) {
      available = false;
      error = e.what();
    }
    up += available;
    json entry{{"id", id}, {"available", available}, {"deterministic", registry_.get(id).deterministic()}};
    if (!available) entry["error"] = error;
    list.push_back(entry);
  }
  const char* status = up == registry_.size() ? "ok" : up > 0 ? "degraded" : "unavailable";
  return {up > 0 ? 200 : 503, json{{"status", status}, {"backends", list}}};
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  explicit Impl(SuggestService& s) : service(s) {}
  SuggestService& service;
  httplib::Server server;
  bool bound = false;
};

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.dump(), "application/json");
}

json parse_body(const httplib::Request& req) { return json::parse(req.body); }

}  // namespace

HttpServer::HttpServer(SuggestService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  impl_->server.Post("/v1/suggest", [&svc](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, svc.suggest(parse_body(req)));
    } catch (const std::exception& e) {
      reply(res, error_response(e));
    }
  });
  impl_->server.Post("/v1/session/events", [&svc](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, svc.log_event(parse_body(req)));
    } catch (const std::exception& e) {
      reply(res, error_response(e));
    }
  });
  impl_->server.Get("/v1/session/events", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, req.has_param("session_id") ? svc.session(req.get_param_value("session_id"))
                                           : Response{400, json{{"error", "session_id query parameter required"}}});
  });
  impl_->server.Get("/v1/health", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound;
}

void HttpServer::run() {
  if (!impl_->bound) throw ValidationError("server is not bound");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace lowreskit::service
