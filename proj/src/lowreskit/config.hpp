#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lowreskit/autocomplete.hpp"
#include "lowreskit/backends.hpp"
#include "lowreskit/ensemble.hpp"
#include "lowreskit/records.hpp"

namespace lowreskit {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "LOWRESKIT_CONFIG";

struct BackendConfig {
  std::string id;
  std::string kind = "reference";  // reference | remote
  std::vector<std::string> train;  // reference: corpus files (absolute after load)
  backends::ReferenceWeights weights;
  std::string url;                 // remote
  double timeout_s = 10.0;
};

/// Run configuration. JSON object; every key is optional:
///
///   seed                  integer (13)
///   backends              [{id, kind, train, weights{bigram,unigram,context}, url, timeout_s}]
///   ensemble              {alpha, theta, beta, sigma, label_bonus, pool_top_n}
///   corpus                {similarity_threshold, min_sentence_terms, min_title_terms}
///   service               {context_mode, session_dir, selectors}
///
/// Relative paths resolve against the config file's directory.
struct Config {
  std::uint64_t seed = 13;
  std::vector<BackendConfig> backends;
  ensemble::EnsembleWeights ensemble;
  double similarity_threshold = 0.85;
  std::size_t min_sentence_terms = 4;
  std::size_t min_title_terms = 1;
  autocomplete::ContextMode context_mode = autocomplete::ContextMode::context_aware;
  std::string session_dir;
  std::string selectors;  // trained selector bundle written by ensemble-eval

  static Config from_json(const json& j, const std::filesystem::path& base_dir = {});
  static Config load(const std::filesystem::path& path);
  /// Loads $LOWRESKIT_CONFIG when set, otherwise returns defaults.
  static Config from_environment();

  /// Instantiates (and for reference backends, trains) every configured backend.
  backends::BackendRegistry build_registry() const;
};

}  // namespace lowreskit
