#include "lowreskit/lowreskit.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>

#include "lowreskit/common.hpp"
#include "lowreskit/config.hpp"
#include "lowreskit/pipelines.hpp"
#include "lowreskit/qa_augment.hpp"
#include "lowreskit/service.hpp"

using lowreskit::json;

struct lrk_config {
  lowreskit::Config config;
};

struct lrk_service {
  std::unique_ptr<lowreskit::service::SuggestService> service;
  std::unique_ptr<lowreskit::service::HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

lrk_status fail(lrk_status status, const char* message) {
  g_last_error = message;
  return status;
}

lrk_status guarded(const std::function<void()>& body) {
  g_last_error.clear();
  try {
    body();
    return LRK_OK;
  } catch (const json::parse_error& e) {
    return fail(LRK_ERR_PARSE, e.what());
  } catch (const json::exception& e) {
    return fail(LRK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const lowreskit::ValidationError& e) {
    const std::string msg = e.what();
    // The NDJSON reader reports malformed lines as validation errors.
    return fail(msg.find("parse_error") != std::string::npos ? LRK_ERR_PARSE : LRK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const lowreskit::IoError& e) {
    return fail(LRK_ERR_IO, e.what());
  } catch (const lowreskit::backends::BackendUnavailable& e) {
    return fail(LRK_ERR_UNAVAILABLE, e.what());
  } catch (const std::exception& e) {
    return fail(LRK_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(LRK_ERR_RUNTIME, "unknown error");
  }
}

using Pipeline = json (*)(const json&, const lowreskit::Config&);

lrk_status run_pipeline(Pipeline fn, const lrk_config* config, const char* options_json, char** report_json) {
  if (!options_json || !report_json) return fail(LRK_ERR_INVALID_ARGUMENT, "options_json and report_json are required");
  *report_json = nullptr;
  return guarded([&] {
    const auto opts = json::parse(options_json);
    if (!opts.is_object()) throw lowreskit::ValidationError("options must be a JSON object");
    const lowreskit::Config defaults;
    *report_json = dup_string(fn(opts, config ? config->config : defaults).dump());
  });
}

lrk_status handler_result(const lowreskit::service::Response& r, int* http_status, char** response_json) {
  *http_status = r.status;
  *response_json = dup_string(r.dump());
  return LRK_OK;
}

}  // namespace

extern "C" {

const char* lrk_last_error(void) { return g_last_error.c_str(); }

const char* lrk_version(void) { return "0.1.0"; }

void lrk_string_free(char* s) { std::free(s); }

void lrk_set_warnings(int enabled) { lowreskit::set_warnings_enabled(enabled != 0); }

lrk_status lrk_config_load(const char* path, lrk_config** out) {
  if (!out) return fail(LRK_ERR_INVALID_ARGUMENT, "out is required");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<lrk_config>();
    c->config = path ? lowreskit::Config::load(path) : lowreskit::Config::from_environment();
    *out = c.release();
  });
}

lrk_status lrk_config_from_json(const char* json_text, const char* base_dir, lrk_config** out) {
  if (!json_text || !out) return fail(LRK_ERR_INVALID_ARGUMENT, "json_text and out are required");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<lrk_config>();
    c->config = lowreskit::Config::from_json(json::parse(json_text), base_dir ? base_dir : "");
    *out = c.release();
  });
}

lrk_status lrk_config_set_seed(lrk_config* config, uint64_t seed) {
  if (!config) return fail(LRK_ERR_INVALID_ARGUMENT, "config is required");
  config->config.seed = seed;
  return LRK_OK;
}

void lrk_config_free(lrk_config* config) { delete config; }

lrk_status lrk_augment_qa(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::augment_qa, c, o, r);
}
lrk_status lrk_rerank(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::rerank, c, o, r);
}
lrk_status lrk_eval_dra(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::eval_dra, c, o, r);
}
lrk_status lrk_augment_ts(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::augment_ts, c, o, r);
}
lrk_status lrk_gate_train_data(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::gate_train_data, c, o, r);
}
lrk_status lrk_gate_apply(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::gate_apply, c, o, r);
}
lrk_status lrk_build_med_corpus(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::build_med_corpus, c, o, r);
}
lrk_status lrk_gen_tasks(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::gen_tasks, c, o, r);
}
lrk_status lrk_predict(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::predict, c, o, r);
}
lrk_status lrk_ensemble_eval(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::ensemble_eval, c, o, r);
}
lrk_status lrk_eval(const lrk_config* c, const char* o, char** r) {
  return run_pipeline(lowreskit::pipelines::evaluate, c, o, r);
}

lrk_status lrk_service_create(const lrk_config* config, lrk_service** out) {
  if (!out) return fail(LRK_ERR_INVALID_ARGUMENT, "out is required");
  *out = nullptr;
  return guarded([&] {
    const lowreskit::Config cfg = config ? config->config : lowreskit::Config{};
    auto s = std::make_unique<lrk_service>();
    s->service = std::make_unique<lowreskit::service::SuggestService>(cfg, cfg.build_registry());
    *out = s.release();
  });
}

void lrk_service_free(lrk_service* service) {
  if (!service) return;
  lrk_service_stop(service);
  delete service;
}

lrk_status lrk_service_suggest(lrk_service* service, const char* request_json, int* http_status, char** response_json) {
  if (!service || !request_json || !http_status || !response_json) {
    return fail(LRK_ERR_INVALID_ARGUMENT, "all arguments are required");
  }
  return guarded([&] {
    lowreskit::service::Response r;
    try {
      r = service->service->suggest(json::parse(request_json));
    } catch (const json::parse_error& e) {
      r = lowreskit::service::error_response(e);
    }
    handler_result(r, http_status, response_json);
  });
}

lrk_status lrk_service_log_event(lrk_service* service, const char* event_json, int* http_status, char** response_json) {
  if (!service || !event_json || !http_status || !response_json) {
    return fail(LRK_ERR_INVALID_ARGUMENT, "all arguments are required");
  }
  return guarded([&] {
    lowreskit::service::Response r;
    try {
      r = service->service->log_event(json::parse(event_json));
    } catch (const json::parse_error& e) {
      r = lowreskit::service::error_response(e);
    }
    handler_result(r, http_status, response_json);
  });
}

lrk_status lrk_service_health(lrk_service* service, int* http_status, char** response_json) {
  if (!service || !http_status || !response_json) return fail(LRK_ERR_INVALID_ARGUMENT, "all arguments are required");
  return guarded([&] { handler_result(service->service->health(), http_status, response_json); });
}

lrk_status lrk_service_bind(lrk_service* service, const char* host, int port, int* bound_port) {
  if (!service || !host || !bound_port) return fail(LRK_ERR_INVALID_ARGUMENT, "all arguments are required");
  if (port < 0 || port > 65535) return fail(LRK_ERR_INVALID_ARGUMENT, "port out of range");
  return guarded([&] {
    if (!service->http) service->http = std::make_unique<lowreskit::service::HttpServer>(*service->service);
    *bound_port = service->http->bind(host, port);
  });
}

lrk_status lrk_service_run(lrk_service* service) {
  if (!service || !service->http) return fail(LRK_ERR_INVALID_ARGUMENT, "service is not bound");
  return guarded([&] { service->http->run(); });
}

void lrk_service_stop(lrk_service* service) {
  if (service && service->http) service->http->stop();
}

}  // extern "C"
