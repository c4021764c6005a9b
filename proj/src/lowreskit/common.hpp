#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lowreskit {

/// Bad input or violated precondition. Maps to exit code 1 at the CLI.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure on an external artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// UTF-8. Offsets across the project count Unicode scalar values.

std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view text);

bool is_space(char32_t c);

// ---------------------------------------------------------------------------
// Whitespace tokenization and normalization.

std::vector<std::string> split_ws(std::string_view text);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::string normalize_ws(std::string_view text);
std::string to_lower(std::string_view text);

// ---------------------------------------------------------------------------
// Seeded randomness. The engine is std::mt19937_64; the integer and real
// mappings are spelled out so results do not depend on the standard library's
// distribution implementations.

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Derive a child seed for `key` from a run seed, so per-item draws are
/// independent of processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Warnings for skipped records. Goes to stderr unless silenced by tests.
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace lowreskit
