#pragma once

// Translation backends: the abstract interface consumed by the round-trip
// harness, concrete mocks, an HTTP client for the JSON wire contract, and a
// persistent content-addressed cache.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byol/error.hpp"

namespace byol::backends {

enum class FailureKind { timeout, http_status, length_mismatch, transport, unmapped_input };

// A backend call failed. Retryable failures are retried by the harness.
class BackendError : public Error {
 public:
  BackendError(FailureKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  FailureKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return kind_ != FailureKind::unmapped_input; }
  ExitCode exit_code() const noexcept override { return ExitCode::io_failure; }

 private:
  FailureKind kind_;
};

class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;

  virtual std::string name() const = 0;
  // Returns exactly one output per input text.
  virtual std::vector<std::string> translate(std::span<const std::string> texts,
                                             std::string_view source_lang,
                                             std::string_view target_lang) = 0;
  virtual bool deterministic() const { return true; }
  virtual bool can_embed() const { return false; }
  virtual std::vector<double> embed(std::string_view text);
};

class IdentityBackend : public TranslationBackend {
 public:
  std::string name() const override { return "identity"; }
  std::vector<std::string> translate(std::span<const std::string> texts, std::string_view,
                                     std::string_view) override;
  bool can_embed() const override { return true; }
  std::vector<double> embed(std::string_view text) override;
};

// Drops the final whitespace-delimited word; remaining words are re-joined with
// single spaces.
class DropLastWordBackend : public IdentityBackend {
 public:
  std::string name() const override { return "drop_last_word"; }
  std::vector<std::string> translate(std::span<const std::string> texts, std::string_view,
                                     std::string_view) override;
};

// Reverses word order; applying it twice restores single-spaced input.
class WordReverseBackend : public IdentityBackend {
 public:
  std::string name() const override { return "word_reverse"; }
  std::vector<std::string> translate(std::span<const std::string> texts, std::string_view,
                                     std::string_view) override;
};

// Looks each input up in a two-column TSV mapping; unmapped input is an error.
class FileBackend : public TranslationBackend {
 public:
  explicit FileBackend(const std::filesystem::path& mapping, std::string name = "file");
  FileBackend(std::map<std::string, std::string> mapping, std::string name);

  std::string name() const override { return name_; }
  std::vector<std::string> translate(std::span<const std::string> texts, std::string_view,
                                     std::string_view) override;

 private:
  std::map<std::string, std::string> mapping_;
  std::string name_;
};

struct HttpOptions {
  std::string endpoint;  // http://host[:port]/path or https://...
  std::optional<std::string> auth_env_var;
  std::chrono::milliseconds timeout{30'000};
  int max_in_flight = 4;
};

// Speaks the JSON wire contract:
//   request  {"text": [...], "source_lang": "...", "target_lang": "..."}
//   response {"translations": [...]}
// Any non-200 status is a failure.
class HttpBackend : public TranslationBackend {
 public:
  HttpBackend(HttpOptions options, std::string name);
  ~HttpBackend() override;

  std::string name() const override { return name_; }
  std::vector<std::string> translate(std::span<const std::string> texts,
                                     std::string_view source_lang,
                                     std::string_view target_lang) override;
  bool deterministic() const override { return false; }

  std::uint64_t request_count() const { return requests_.load(); }

 private:
  struct Gate;
  HttpOptions options_;
  std::string name_;
  std::unique_ptr<Gate> gate_;
  std::atomic<std::uint64_t> requests_{0};
};

// Persistent translation cache. Layout under the root directory:
//   entries/<sha256 of key>   translated text, byte-exact
//   index.tsv                 key hash, backend, source, target, content hash
// A value file is written (and renamed into place) before its index line is
// appended, so a crash never leaves an index entry without a value.
class TranslationCache {
 public:
  explicit TranslationCache(std::filesystem::path root);

  // Content hash is SHA-256 of the NFC-normalized UTF-8 text.
  static std::string content_hash(std::string_view text);
  static std::string key_hash(std::string_view backend, std::string_view source_lang,
                              std::string_view target_lang, std::string_view text);

  std::optional<std::string> get(std::string_view backend, std::string_view source_lang,
                                 std::string_view target_lang, std::string_view text) const;
  void put(std::string_view backend, std::string_view source_lang, std::string_view target_lang,
           std::string_view text, std::string_view translation);

  std::size_t size() const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, bool> index_;  // key hash -> present
};

// Consults the cache before the wrapped backend and stores every response.
class CachedBackend : public TranslationBackend {
 public:
  CachedBackend(std::shared_ptr<TranslationBackend> inner, std::shared_ptr<TranslationCache> cache);

  std::string name() const override { return inner_->name(); }
  std::vector<std::string> translate(std::span<const std::string> texts,
                                     std::string_view source_lang,
                                     std::string_view target_lang) override;
  // Cached output is reproducible even when the inner backend is not.
  bool deterministic() const override { return true; }
  bool can_embed() const override { return inner_->can_embed(); }
  std::vector<double> embed(std::string_view text) override { return inner_->embed(text); }

  std::uint64_t inner_calls() const { return inner_calls_.load(); }
  std::uint64_t hits() const { return hits_.load(); }

 private:
  std::shared_ptr<TranslationBackend> inner_;
  std::shared_ptr<TranslationCache> cache_;
  std::atomic<std::uint64_t> inner_calls_{0};
  std::atomic<std::uint64_t> hits_{0};
};

enum class BackendKind { http, file, identity, drop_last_word, word_reverse };

struct BackendConfig {
  BackendKind kind = BackendKind::identity;
  std::string name;  // defaults to the kind name
  std::optional<std::string> endpoint;
  std::optional<std::string> auth_env_var;
  std::optional<std::filesystem::path> mapping;
  std::chrono::milliseconds timeout{30'000};
  int max_in_flight = 4;
  int batch_size = 32;

  void validate() const;
};

BackendKind parse_backend_kind(std::string_view s);
std::string_view to_string(BackendKind kind);

std::shared_ptr<TranslationBackend> make_backend(const BackendConfig& config);

// One-shot translation through a freshly built backend (cache optional).
std::vector<std::string> translate_batch(const BackendConfig& config,
                                         std::span<const std::string> texts,
                                         std::string_view source_lang,
                                         std::string_view target_lang,
                                         std::shared_ptr<TranslationCache> cache = nullptr);

// Deterministic bag-of-hashed-words embedding used by the mock backends.
std::vector<double> hashed_embedding(std::string_view text, std::size_t dim = 64);

}  // namespace byol::backends
