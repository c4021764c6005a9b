#include "lowreskit/config.hpp"

#include <cstdlib>

#include "lowreskit/common.hpp"

namespace lowreskit {

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path.string();
  return (base / path).lexically_normal().string();
}

}  // namespace

Config Config::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  Config c;
  c.seed = optional_field<std::uint64_t>(j, "seed", c.seed);

  if (auto it = j.find("backends"); it != j.end()) {
    for (const auto& b : *it) {
      BackendConfig bc;
      bc.id = require<std::string>(b, "id");
      bc.kind = optional_field<std::string>(b, "kind", "reference");
      for (const auto& t : optional_field<std::vector<std::string>>(b, "train", {})) bc.train.push_back(resolve(base_dir, t));
      if (auto w = b.find("weights"); w != b.end()) {
        bc.weights.bigram = optional_field<double>(*w, "bigram", bc.weights.bigram);
        bc.weights.unigram = optional_field<double>(*w, "unigram", bc.weights.unigram);
        bc.weights.context = optional_field<double>(*w, "context", bc.weights.context);
      }
      bc.url = optional_field<std::string>(b, "url", "");
      bc.timeout_s = optional_field<double>(b, "timeout_s", bc.timeout_s);
      if (bc.kind != "reference" && bc.kind != "remote") {
        throw ValidationError("backend '" + bc.id + "': unknown kind '" + bc.kind + "'");
      }
      if (bc.kind == "remote" && bc.url.empty()) throw ValidationError("remote backend '" + bc.id + "' needs a url");
      c.backends.push_back(std::move(bc));
    }
  }
  if (auto e = j.find("ensemble"); e != j.end()) {
    c.ensemble.alpha = optional_field<double>(*e, "alpha", c.ensemble.alpha);
    c.ensemble.theta = optional_field<double>(*e, "theta", c.ensemble.theta);
    c.ensemble.beta = optional_field<double>(*e, "beta", c.ensemble.beta);
    c.ensemble.sigma = optional_field<double>(*e, "sigma", c.ensemble.sigma);
    c.ensemble.label_bonus = optional_field<double>(*e, "label_bonus", c.ensemble.label_bonus);
    c.ensemble.pool_top_n = optional_field<std::size_t>(*e, "pool_top_n", c.ensemble.pool_top_n);
    c.ensemble.validate();
  }
  if (auto k = j.find("corpus"); k != j.end()) {
    c.similarity_threshold = optional_field<double>(*k, "similarity_threshold", c.similarity_threshold);
    c.min_sentence_terms = optional_field<std::size_t>(*k, "min_sentence_terms", c.min_sentence_terms);
    c.min_title_terms = optional_field<std::size_t>(*k, "min_title_terms", c.min_title_terms);
  }
  if (auto s = j.find("service"); s != j.end()) {
    c.context_mode = autocomplete::context_mode_from_string(optional_field<std::string>(*s, "context_mode", "context_aware"));
    c.session_dir = resolve(base_dir, optional_field<std::string>(*s, "session_dir", ""));
    c.selectors = resolve(base_dir, optional_field<std::string>(*s, "selectors", ""));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

Config Config::from_environment() {
  if (const char* p = std::getenv(kConfigEnvVar); p && *p) return load(p);
  return Config{};
}

backends::BackendRegistry Config::build_registry() const {
  backends::BackendRegistry registry;
  for (const auto& b : backends) {
    if (b.kind == "remote") {
      registry.add(std::make_unique<backends::RemoteBackend>(b.id, b.url, backends::Capabilities{true, false},
                                                             b.timeout_s));
      continue;
    }
    auto ref = std::make_unique<backends::ReferenceBackend>(b.id, b.weights);
    for (const auto& path : b.train) {
      for (const auto& s : backends::load_sentences(path)) ref->observe_text(s);
    }
    registry.add(std::move(ref));
  }
  return registry;
}

}  // namespace lowreskit
