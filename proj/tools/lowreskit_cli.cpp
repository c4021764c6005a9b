// lowreskit command-line front end. Every subcommand forwards its options to
// the matching C API call and prints the JSON summary on stdout.

#include <pthread.h>

#include <csignal>
#include <cstdint>
#include <deque>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowreskit/lowreskit.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

enum class Kind { str, integer, real, int_list, str_list, flag };

struct Opt {
  const char* flag;
  const char* key;
  Kind kind;
  bool required;
  const char* help;
};

using PipelineFn = lrk_status (*)(const lrk_config*, const char*, char**);

struct Command {
  const char* name;
  const char* help;
  PipelineFn fn;
  std::vector<Opt> opts;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> kCommands{
      {"augment-qa", "Add shifted answer-span examples to a QA dataset", lrk_augment_qa,
       {{"--in", "in", Kind::str, true, "QA examples (NDJSON)"},
        {"--out", "out", Kind::str, true, "originals followed by augmented examples"},
        {"--plan-out", "plan_out", Kind::str, false, "write the two-stage training plan here"},
        {"--threshold", "threshold", Kind::real, false, "selection threshold T (0.8)"},
        {"--spans-per-example", "spans_per_example", Kind::integer, false, "augmented spans per example (2)"},
        {"--shifts", "shifts", Kind::int_list, false, "shift magnitudes, comma separated (-32,-16,16,32)"},
        {"--snap", "snap", Kind::str, false, "boundary snapping: word | exact"}}},
      {"rerank", "Rank documents by their best span score and keep the top k", lrk_rerank,
       {{"--in", "in", Kind::str, true, "span scores (NDJSON)"},
        {"--out", "out", Kind::str, true, "ranked retrieval results"},
        {"--k", "k", Kind::integer, false, "documents kept per question (5)"}}},
      {"eval-dra", "Document retrieval accuracy at n", lrk_eval_dra,
       {{"--in", "in", Kind::str, true, "ranked retrieval results"},
        {"--gold", "gold", Kind::str, true, "QA examples or {question_id, doc_id} records"},
        {"--at", "at", Kind::int_list, false, "cutoffs (1,5)"},
        {"--out", "out", Kind::str, false, "metric reports (NDJSON)"}}},
      {"augment-ts", "Simplification-based augmentation of tagged examples", lrk_augment_ts,
       {{"--in", "in", Kind::str, true, "tagged examples (NDJSON)"},
        {"--out", "out", Kind::str, true, "composed training set"},
        {"--p", "p", Kind::real, false, "sampling fraction (0.5)"},
        {"--simplifier", "simplifier", Kind::str, false, "reference | identity | lookup table path"},
        {"--composition", "composition", Kind::str, false,
         "original | simplified | simplified_plus_complement | simplified_plus_original | swapped"}}},
      {"gate-train-data", "Label original/simplified pairs for the simplification gate", lrk_gate_train_data,
       {{"--in", "in", Kind::str, true, "pairs with predictions on both variants"},
        {"--out", "out", Kind::str, true, "good/bad training examples"},
        {"--excluded-out", "excluded_out", Kind::str, false, "pairs where both variants were wrong"},
        {"--model-out", "model_out", Kind::str, false, "train a gate model and write it here"}}},
      {"gate-apply", "Choose the original or simplified text per record", lrk_gate_apply,
       {{"--in", "in", Kind::str, true, "{id, original_text, simplified_text} records"},
        {"--out", "out", Kind::str, true, "selected texts"},
        {"--gate", "gate", Kind::str, false, "good | bad | gate model path"}}},
      {"build-med-corpus", "Extract the medical subset of an aligned corpus", lrk_build_med_corpus,
       {{"--in", "in", Kind::str, true, "aligned pairs (NDJSON)"},
        {"--dictionary", "dictionary", Kind::str, true, "term<TAB>type lines"},
        {"--out", "out", Kind::str, true, "medical pairs"},
        {"--remainder-out", "remainder_out", Kind::str, false, "non-medical pairs"},
        {"--split-dir", "split_dir", Kind::str, false, "write train/dev/test splits here"},
        {"--similarity-threshold", "similarity_threshold", Kind::real, false, "trigram Jaccard threshold"},
        {"--min-sentence-terms", "min_sentence_terms", Kind::integer, false, "terms required in the sentence"},
        {"--min-title-terms", "min_title_terms", Kind::integer, false, "terms required in the title"}}},
      {"gen-tasks", "Generate next-word prediction tasks from aligned pairs", lrk_gen_tasks,
       {{"--in", "in", Kind::str, true, "aligned pairs (NDJSON)"},
        {"--out", "out", Kind::str, true, "prediction tasks"},
        {"--context-mode", "context_mode", Kind::str, false, "context_aware | no_context"}}},
      {"predict", "Run the configured backends over prediction tasks", lrk_predict,
       {{"--tasks", "tasks", Kind::str, true, "prediction tasks"},
        {"--out", "out", Kind::str, true, "prediction log (NDJSON)"},
        {"--top-n", "top_n", Kind::integer, false, "suggestions per backend (5)"},
        {"--backends", "backends", Kind::str_list, false, "backend ids (all configured)"},
        {"--context-mode", "context_mode", Kind::str, false, "context_aware | no_context"}}},
      {"ensemble-eval", "Replay a prediction log through an ensemble strategy", lrk_ensemble_eval,
       {{"--tasks", "tasks", Kind::str, true, "prediction tasks"},
        {"--predictions", "predictions", Kind::str, true, "prediction log"},
        {"--out", "out", Kind::str, true, "one decision per task"},
        {"--strategy", "strategy", Kind::str, false, "majority | 4cc | autometsl | upper-bound"},
        {"--selector", "selector", Kind::str, false, "trained | oracle"},
        {"--train-tasks", "train_tasks", Kind::str, false, "selector training tasks"},
        {"--train-predictions", "train_predictions", Kind::str, false, "selector training prediction log"},
        {"--selector-out", "selector_out", Kind::str, false, "write trained selectors here"},
        {"--backend-order", "backend_order", Kind::str_list, false, "backend order (log order)"},
        {"--pooled", "pooled", Kind::flag, false, "score each backend's top-n pool, not just its top-1"}}},
      {"eval", "Accuracy, accuracy@n, span and token metrics", lrk_eval,
       {{"--kind", "kind", Kind::str, false, "autocomplete | span | text"},
        {"--tasks", "tasks", Kind::str, false, "prediction tasks (autocomplete)"},
        {"--predictions", "predictions", Kind::str, true, "decisions, prediction log, spans or texts"},
        {"--gold", "gold", Kind::str, false, "gold spans or texts"},
        {"--at", "at", Kind::int_list, false, "accuracy@n cutoffs (1)"},
        {"--breakdown", "breakdown", Kind::str, false, "difficult_length | prefix_length"},
        {"--backend", "backend", Kind::str, false, "restrict a prediction log to one backend"},
        {"--out", "out", Kind::str, false, "metric reports (NDJSON)"}}},
  };
  return kCommands;
}

struct Bound {
  const Command* command;
  CLI::App* app;
  std::deque<std::vector<std::string>> values;
  std::deque<bool> flags;
};

json build_options(const Bound& b) {
  json opts = json::object();
  std::size_t vi = 0, fi = 0;
  for (const auto& o : b.command->opts) {
    if (o.kind == Kind::flag) {
      if (b.flags[fi]) opts[o.key] = true;
      ++fi;
      continue;
    }
    const auto& v = b.values[vi++];
    if (v.empty()) continue;
    try {
      switch (o.kind) {
        case Kind::str: opts[o.key] = v.front(); break;
        case Kind::integer: opts[o.key] = std::stoll(v.front()); break;
        case Kind::real: opts[o.key] = std::stod(v.front()); break;
        case Kind::int_list: {
          json a = json::array();
          for (const auto& s : v) a.push_back(std::stoll(s));
          opts[o.key] = a;
          break;
        }
        case Kind::str_list: opts[o.key] = v; break;
        case Kind::flag: break;
      }
    } catch (const std::exception&) {
      throw CLI::ValidationError(o.flag, "expected a number");
    }
  }
  return opts;
}

int exit_code(lrk_status s) {
  if (s == LRK_OK) return kExitOk;
  if (s == LRK_ERR_INVALID_ARGUMENT || s == LRK_ERR_PARSE) return kExitValidation;
  return kExitRuntime;
}

int report_failure(lrk_status s) {
  std::cerr << "error: " << lrk_last_error() << "\n";
  return exit_code(s);
}

int serve(lrk_config* config, const std::string& host, int port) {
  // Route SIGINT/SIGTERM to a waiter thread so the server can shut down cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  lrk_service* service = nullptr;
  if (auto s = lrk_service_create(config, &service); s != LRK_OK) return report_failure(s);
  int bound = 0;
  if (auto s = lrk_service_bind(service, host.c_str(), port, &bound); s != LRK_OK) {
    lrk_service_free(service);
    return report_failure(s);
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    lrk_service_stop(service);
  });
  const auto status = lrk_service_run(service);
  // Wake the waiter if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  lrk_service_free(service);
  return status == LRK_OK ? kExitOk : report_failure(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-resource NLP data augmentation, simplification and autocomplete toolkit", "lowreskit"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "config file (default: $LOWRESKIT_CONFIG)");
  app.add_option("--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);

  std::deque<Bound> bound;
  for (const auto& cmd : commands()) {
    auto& b = bound.emplace_back(Bound{&cmd, app.add_subcommand(cmd.name, cmd.help), {}, {}});
    for (const auto& o : cmd.opts) {
      if (o.kind == Kind::flag) {
        b.app->add_flag(o.flag, b.flags.emplace_back(false), o.help);
        continue;
      }
      auto& storage = b.values.emplace_back();
      auto* opt = b.app->add_option(o.flag, storage, o.help);
      if (o.kind == Kind::int_list || o.kind == Kind::str_list) {
        opt->delimiter(',');
      } else {
        opt->expected(1);
      }
      if (o.required) opt->required();
    }
  }
  auto* serve_cmd = app.add_subcommand("serve", "Serve suggestions and session logging over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port; 0 picks an ephemeral port")->check(CLI::Range(0, 65535));

  if (argc < 2) {
    std::cerr << app.help();
    return kExitValidation;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitValidation;
  }

  lrk_config* config = nullptr;
  if (auto s = lrk_config_load(config_path.empty() ? nullptr : config_path.c_str(), &config); s != LRK_OK) {
    return report_failure(s);
  }
  if (seed >= 0) lrk_config_set_seed(config, static_cast<std::uint64_t>(seed));

  int code = kExitOk;
  if (serve_cmd->parsed()) {
    code = serve(config, host, port);
  } else {
    for (const auto& b : bound) {
      if (!b.app->parsed()) continue;
      json opts;
      try {
        opts = build_options(b);
      } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        lrk_config_free(config);
        return kExitValidation;
      }
      char* report = nullptr;
      const auto s = b.command->fn(config, opts.dump().c_str(), &report);
      if (s != LRK_OK) {
        code = report_failure(s);
      } else {
        auto summary = json::parse(report);
        lrk_string_free(report);
        std::string table;
        if (summary.contains("table")) {
          table = summary["table"].get<std::string>();
          summary.erase("table");
        }
        std::cout << summary.dump(2) << "\n" << table;
      }
    }
  }
  lrk_config_free(config);
  return code;
}
