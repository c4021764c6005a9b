#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lowreskit/config.hpp"
#include "lowreskit/ensemble.hpp"
#include "lowreskit/records.hpp"

/// Suggestion and session-logging service for the editor. Handlers take and
/// return JSON so they can be driven in-process; HttpServer only adapts them.
namespace lowreskit::service {

/// Request conflicts with session state (ordering, closed session). HTTP 409.
class Conflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Response {
  int status = 200;
  json body;

  std::string dump() const { return body.dump(); }
};

enum class EventKind { suggest_shown, accepted, overridden, finished };

EventKind event_kind_from_string(std::string_view name);
std::string to_string(EventKind kind);

/// payload: word (accepted/overridden), rank (1-based, accepted; null for
/// overridden), timestamp (required, non-decreasing per session). Any other
/// payload keys (e.g. the shown suggestion words) are stored verbatim.
struct SessionEvent {
  std::string session_id;
  EventKind event = EventKind::suggest_shown;
  json payload = json::object();
  std::optional<std::string> event_id;

  double timestamp() const { return payload.at("timestamp").get<double>(); }
};

SessionEvent event_from_json(const json& body);
json event_to_json(const SessionEvent& e, std::uint64_t seq);

/// Append-only per-session event logs. With a directory, every event is also
/// appended as one NDJSON line to <dir>/<session_id>.ndjson, and existing logs
/// are loaded at construction.
class SessionStore {
 public:
  explicit SessionStore(std::string dir = "");

  struct Ack {
    std::string session_id;
    std::uint64_t seq = 0;
    bool duplicate = false;
  };

  /// A replay of a stored event (same event_id, or same event and payload when
  /// no id is given) returns the original ack without appending.
  Ack append(const SessionEvent& event);
  std::vector<SessionEvent> events(const std::string& session_id) const;
  bool contains(const std::string& session_id) const;

 private:
  struct Stored {
    SessionEvent event;
    std::uint64_t seq;
    std::string key;
  };
  struct Session {
    std::vector<Stored> events;
    std::map<std::string, std::uint64_t> seen;  // dedupe key -> seq
    bool finished = false;
  };
  static std::string dedupe_key(const SessionEvent& e);
  void load();

  std::string dir_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::uint64_t seq_ = 0;
};

/// Typed tokens committed through accepted/overridden events, up to finished.
std::vector<std::string> reconstruct_sentence(const std::vector<SessionEvent>& events);

class SuggestService {
 public:
  /// Loads trained selectors from cfg.selectors when set.
  SuggestService(Config cfg, backends::BackendRegistry registry);

  void set_selectors(std::shared_ptr<const ensemble::ClassSelector> class_selector,
                     std::shared_ptr<const ensemble::LabelSetSelector> label_selector);

  /// {difficult, typed[], n (1..10, default 5), strategy} ->
  /// {strategy, suggestions: [{word, score, source_model}], warnings}
  Response suggest(const json& body);
  /// SessionEvent -> {session_id, seq}
  Response log_event(const json& body);
  /// {session_id} -> {session_id, events, sentence}
  Response session(const std::string& session_id) const;
  /// {status, backends: [{id, available, deterministic}]}
  Response health();

  const Config& config() const { return cfg_; }

 private:
  json suggest_impl(const json& body);

  Config cfg_;
  backends::BackendRegistry registry_;
  SessionStore store_;
  std::shared_ptr<const ensemble::ClassSelector> class_selector_;
  std::shared_ptr<const ensemble::LabelSetSelector> label_selector_;
};

/// Error-to-status mapping shared by the handlers: ValidationError and JSON
/// parse errors 400, Conflict 409, BackendUnavailable 503, anything else 500.
Response error_response(const std::exception& e);

class HttpServer {
 public:
  explicit HttpServer(SuggestService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving; port 0 picks an ephemeral port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lowreskit::service
