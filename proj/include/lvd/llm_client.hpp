#pragma once

// Chat-completions client with three interchangeable backends: a live HTTP
// backend, a replay backend that reads a committed response cache, and a
// scripted backend for tests. All backends share one retry loop and one
// on-disk cache layout so a live run can be replayed byte for byte later.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lvd/prompting.hpp"

namespace lvd::llm {

enum class LlmErrorKind {
  AllAttemptsFailed,  // every attempt produced an unparsable completion
  Transport,          // connection / HTTP / malformed response envelope
  MissingFixture,     // replay backend had no cached file for the key
  IO,                 // cache directory could not be read or written
};

inline const char* to_string(LlmErrorKind k) {
  switch (k) {
    case LlmErrorKind::AllAttemptsFailed: return "AllAttemptsFailed";
    case LlmErrorKind::Transport: return "Transport";
    case LlmErrorKind::MissingFixture: return "MissingFixture";
    case LlmErrorKind::IO: return "IO";
  }
  return "?";
}

class LlmError : public std::runtime_error {
 public:
  LlmError(LlmErrorKind kind, std::string detail,
           std::vector<std::string> raw_completions = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind(kind),
        detail(std::move(detail)),
        raw_completions(std::move(raw_completions)) {}

  LlmErrorKind kind;
  std::string detail;
  // On AllAttemptsFailed: the raw text of every completion, in attempt order.
  std::vector<std::string> raw_completions;
};

struct LlmConfig {
  std::string endpoint = "http://localhost:8080/v1/chat/completions";
  std::string model = "gpt-4";
  double temperature = 0.7;
  int max_tokens = 1024;
  std::string api_key_env = "LVD_API_KEY";
  int timeout_seconds = 60;
  // Root of the on-disk completion cache (live writes, replay reads).
  std::string cache_dir = "cache";
};

// FNV-1a 64-bit over the exact byte sequence.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Cache key for one (model, prompt, attempt) triple: 16 lowercase hex chars.
// The attempt number is part of the key so retries and extra samples get
// distinct cache slots.
inline std::string cache_key(const std::string& model, const std::string& prompt,
                             int attempt) {
  std::string basis = model;
  basis.push_back('\x1f');
  basis += prompt;
  basis.push_back('\x1f');
  basis += std::to_string(attempt);
  std::uint64_t h = fnv1a64(basis);
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::filesystem::path cache_path(const LlmConfig& cfg, const std::string& key) {
  return std::filesystem::path(cfg.cache_dir) / cfg.model / (key + ".txt");
}

enum class AttemptOutcome { Parsed, ParseFailed, TransportFailed };

inline const char* to_string(AttemptOutcome o) {
  switch (o) {
    case AttemptOutcome::Parsed: return "parsed";
    case AttemptOutcome::ParseFailed: return "parse_failed";
    case AttemptOutcome::TransportFailed: return "transport_failed";
  }
  return "?";
}

struct GenerationAttempt {
  int attempt_index = 1;  // 1-based
  std::string prompt_hash;
  std::string raw;
  AttemptOutcome outcome = AttemptOutcome::ParseFailed;
  double wall_seconds = 0.0;
};

struct GenerationRecord {
  ParsedDsl parsed;
  std::vector<GenerationAttempt> attempts;  // all attempts, last one parsed
};

// A backend turns (prompt messages, attempt number) into raw completion text.
class Backend {
 public:
  virtual ~Backend() = default;
  // May throw LlmError(Transport) or LlmError(MissingFixture).
  virtual std::string complete(const LlmConfig& cfg,
                               const std::vector<prompting::ChatMessage>& messages,
                               const std::string& key) = 0;
};

// Test backend: hands out a fixed list of completions in order.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> completions)
      : completions_(std::move(completions)) {}

  std::string complete(const LlmConfig&, const std::vector<prompting::ChatMessage>&,
                       const std::string&) override {
    if (next_ >= completions_.size())
      throw LlmError(LlmErrorKind::Transport, "scripted backend exhausted");
    return completions_[next_++];
  }

  std::size_t consumed() const { return next_; }

 private:
  std::vector<std::string> completions_;
  std::size_t next_ = 0;
};

// Replay backend: resolves the cache file for the key and returns its bytes.
class ReplayBackend : public Backend {
 public:
  std::string complete(const LlmConfig& cfg, const std::vector<prompting::ChatMessage>&,
                       const std::string& key) override {
    auto path = cache_path(cfg, key);
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw LlmError(LlmErrorKind::MissingFixture,
                     "no cached completion at " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

namespace detail {

inline void write_cache_file(const LlmConfig& cfg, const std::string& key,
                             const std::string& body) {
  auto path = cache_path(cfg, key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec)
    throw LlmError(LlmErrorKind::IO, "cannot create " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LlmError(LlmErrorKind::IO, "cannot write " + path.string());
  out << body;
}

}  // namespace detail

// Live backend: OpenAI-style chat completions over HTTP. Every response is
// written through to the cache so the run can be replayed offline.
//
// Declared here, defined in llm_live.hpp to keep httplib out of translation
// units that never go on the network.
class LiveBackend : public Backend {
 public:
  std::string complete(const LlmConfig& cfg,
                       const std::vector<prompting::ChatMessage>& messages,
                       const std::string& key) override;
};

// Hash basis for one generation: the flattened prompt, plus a sample salt so
// that independent samples of the same prompt occupy distinct cache slots.
// The salt is a local naming device only; the transmitted messages never
// change with sample_index.
inline std::string prompt_hash_basis(const prompting::PromptBundle& bundle,
                                     int sample_index) {
  std::string basis = prompting::flatten_messages(prompting::build_messages(bundle));
  if (sample_index > 0) basis += "#sample=" + std::to_string(sample_index);
  return basis;
}

// Generate one scene layout: up to three attempts with the identical prompt,
// stopping at the first completion that parses. Throws AllAttemptsFailed
// (carrying every raw completion) if none does; Transport and MissingFixture
// pass through from the backend.
inline GenerationRecord generate_dsl(const prompting::PromptBundle& bundle,
                                     const LlmConfig& cfg, Backend& backend,
                                     int sample_index = 0) {
  const auto messages = prompting::build_messages(bundle);
  const std::string basis = prompt_hash_basis(bundle, sample_index);

  GenerationRecord rec;
  std::vector<std::string> raws;
  for (int attempt = 1; attempt <= 3; ++attempt) {
    const std::string key = cache_key(cfg.model, basis, attempt);
    GenerationAttempt a;
    a.attempt_index = attempt;
    a.prompt_hash = key;
    auto begin = std::chrono::steady_clock::now();
    a.raw = backend.complete(cfg, messages, key);
    a.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin)
            .count();
    raws.push_back(a.raw);
    try {
      rec.parsed = parse_dsl(a.raw);
      a.outcome = AttemptOutcome::Parsed;
      rec.attempts.push_back(std::move(a));
      return rec;
    } catch (const ParseError&) {
      a.outcome = AttemptOutcome::ParseFailed;
      rec.attempts.push_back(std::move(a));
    }
  }
  throw LlmError(LlmErrorKind::AllAttemptsFailed,
                 "no parsable completion in 3 attempts", std::move(raws));
}

// Remove every cached completion under dir; returns the number of files removed.
inline std::size_t purge_cache(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(dir, ec)) return 0;
  std::size_t removed = 0;
  for (auto it = fs::recursive_directory_iterator(dir, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file(ec)) {
      fs::remove(it->path(), ec);
      if (!ec) ++removed;
    }
  }
  // Sweep now-empty directories; harmless if something remains.
  fs::remove_all(dir, ec);
  return removed;
}

}  // namespace lvd::llm
