#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "byol/backends.hpp"

#include <condition_variable>
#include <cstdlib>
#include <fstream>

#include "byol/digest.hpp"
#include "byol/io.hpp"
#include "byol/text.hpp"

namespace byol::backends {

namespace fs = std::filesystem;

std::vector<double> TranslationBackend::embed(std::string_view) {
  throw ContractViolation("backend '" + name() + "' cannot embed text");
}

std::vector<double> hashed_embedding(std::string_view s, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : text::tokenize_international(s)) {
    const std::uint64_t h = splitmix64(std::stoull(sha256_hex(text::to_lower(tok)).substr(0, 16), nullptr, 16));
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  // Keeps empty or perfectly cancelling texts away from the zero vector.
  v[dim - 1] += 1e-3;
  return v;
}

std::vector<std::string> IdentityBackend::translate(std::span<const std::string> texts,
                                                    std::string_view, std::string_view) {
  return {texts.begin(), texts.end()};
}

std::vector<double> IdentityBackend::embed(std::string_view s) { return hashed_embedding(s); }

std::vector<std::string> DropLastWordBackend::translate(std::span<const std::string> texts,
                                                        std::string_view, std::string_view) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto words = text::split_ws(t);
    if (!words.empty()) words.pop_back();
    out.push_back(text::join(words, " "));
  }
  return out;
}

std::vector<std::string> WordReverseBackend::translate(std::span<const std::string> texts,
                                                       std::string_view, std::string_view) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto words = text::split_ws(t);
    std::reverse(words.begin(), words.end());
    out.push_back(text::join(words, " "));
  }
  return out;
}

FileBackend::FileBackend(std::map<std::string, std::string> mapping, std::string name)
    : mapping_(std::move(mapping)), name_(std::move(name)) {}

FileBackend::FileBackend(const fs::path& path, std::string name) : name_(std::move(name)) {
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto f = io::split_tab(lines[i]);
    if (f.size() != 2) throw ParseError(path.string(), i + 1, 0, "expected input<TAB>output");
    mapping_[f[0]] = f[1];
  }
}

std::vector<std::string> FileBackend::translate(std::span<const std::string> texts,
                                                std::string_view, std::string_view) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = mapping_.find(t);
    if (it == mapping_.end()) {
      throw BackendError(FailureKind::unmapped_input, name_ + ": no mapping for '" + t + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

// Bounds concurrent requests for one backend instance.
struct HttpBackend::Gate {
  std::mutex m;
  std::condition_variable cv;
  int available;
  explicit Gate(int n) : available(n) {}
  void acquire() {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(m);
      ++available;
    }
    cv.notify_one();
  }
};

HttpBackend::HttpBackend(HttpOptions options, std::string name)
    : options_(std::move(options)), name_(std::move(name)),
      gate_(std::make_unique<Gate>(options_.max_in_flight)) {
  if (options_.endpoint.empty()) throw ContractViolation("http backend requires an endpoint");
  if (options_.max_in_flight < 1) throw ContractViolation("max_in_flight must be positive");
}

HttpBackend::~HttpBackend() = default;

std::vector<std::string> HttpBackend::translate(std::span<const std::string> texts,
                                                std::string_view source_lang,
                                                std::string_view target_lang) {
  // Split "scheme://host:port/path".
  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  io::Json body = {{"text", io::Json::array()},
                   {"source_lang", source_lang},
                   {"target_lang", target_lang}};
  for (const auto& t : texts) body["text"].push_back(text::nfc(t));

  httplib::Headers headers;
  if (options_.auth_env_var) {
    if (const char* token = std::getenv(options_.auth_env_var->c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  gate_->acquire();
  struct Release {
    Gate* g;
    ~Release() { g->release(); }
  } release{gate_.get()};

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  ++requests_;
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                          ? FailureKind::timeout
                          : FailureKind::transport;
    throw BackendError(kind, name_ + ": request failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw BackendError(FailureKind::http_status,
                       name_ + ": HTTP status " + std::to_string(res->status));
  }
  std::vector<std::string> out;
  try {
    const auto j = io::Json::parse(res->body);
    for (const auto& t : j.at("translations")) out.push_back(t.get<std::string>());
  } catch (const io::Json::exception& e) {
    throw BackendError(FailureKind::transport, name_ + ": malformed response: " + e.what());
  }
  if (out.size() != texts.size()) {
    throw BackendError(FailureKind::length_mismatch,
                       name_ + ": expected " + std::to_string(texts.size()) +
                           " translations, got " + std::to_string(out.size()));
  }
  return out;
}

TranslationCache::TranslationCache(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "entries");
  const fs::path index = root_ / "index.tsv";
  if (!fs::exists(index)) return;
  for (const auto& line : io::read_lines(index)) {
    const auto f = io::split_tab(line);
    // A torn final line or a missing value file means the write never finished.
    if (f.size() == 5 && f[0].size() == 64 && fs::exists(root_ / "entries" / f[0])) {
      index_[f[0]] = true;
    }
  }
}

std::string TranslationCache::content_hash(std::string_view t) { return sha256_hex(text::nfc(t)); }

std::string TranslationCache::key_hash(std::string_view backend, std::string_view source_lang,
                                       std::string_view target_lang, std::string_view t) {
  Sha256 h;
  h.field(backend).field(source_lang).field(target_lang).field(content_hash(t));
  return h.hex();
}

std::optional<std::string> TranslationCache::get(std::string_view backend,
                                                 std::string_view source_lang,
                                                 std::string_view target_lang,
                                                 std::string_view t) const {
  const std::string key = key_hash(backend, source_lang, target_lang, t);
  std::shared_lock lock(mutex_);
  if (!index_.contains(key)) return std::nullopt;
  return io::read_file(root_ / "entries" / key);
}

void TranslationCache::put(std::string_view backend, std::string_view source_lang,
                           std::string_view target_lang, std::string_view t,
                           std::string_view translation) {
  const std::string key = key_hash(backend, source_lang, target_lang, t);
  std::unique_lock lock(mutex_);
  if (index_.contains(key)) return;
  io::write_file(root_ / "entries" / key, translation);
  std::ofstream index(root_ / "index.tsv", std::ios::app | std::ios::binary);
  if (!index) throw IoError("cannot append to cache index in " + root_.string());
  index << key << '\t' << backend << '\t' << source_lang << '\t' << target_lang << '\t'
        << content_hash(t) << '\n';
  index.flush();
  if (!index) throw IoError("cache index write failed in " + root_.string());
  index_[key] = true;
}

std::size_t TranslationCache::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

CachedBackend::CachedBackend(std::shared_ptr<TranslationBackend> inner,
                             std::shared_ptr<TranslationCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_ || !cache_) throw ContractViolation("CachedBackend needs a backend and a cache");
}

std::vector<std::string> CachedBackend::translate(std::span<const std::string> texts,
                                                  std::string_view source_lang,
                                                  std::string_view target_lang) {
  const std::string backend = inner_->name();
  std::vector<std::optional<std::string>> found(texts.size());
  std::vector<std::string> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    found[i] = cache_->get(backend, source_lang, target_lang, texts[i]);
    if (found[i]) {
      ++hits_;
    } else {
      misses.push_back(texts[i]);
      miss_index.push_back(i);
    }
  }
  if (!misses.empty()) {
    ++inner_calls_;
    auto fresh = inner_->translate(misses, source_lang, target_lang);
    if (fresh.size() != misses.size()) {
      throw BackendError(FailureKind::length_mismatch, backend + ": output batch length differs");
    }
    for (std::size_t k = 0; k < misses.size(); ++k) {
      cache_->put(backend, source_lang, target_lang, misses[k], fresh[k]);
      found[miss_index[k]] = std::move(fresh[k]);
    }
  }
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (auto& f : found) out.push_back(std::move(*f));
  return out;
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::http;
  if (s == "file") return BackendKind::file;
  if (s == "identity") return BackendKind::identity;
  if (s == "drop_last_word" || s == "drop-last-word") return BackendKind::drop_last_word;
  if (s == "word_reverse" || s == "word-reverse") return BackendKind::word_reverse;
  throw ContractViolation("unknown backend kind '" + std::string(s) + "'");
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http: return "http";
    case BackendKind::file: return "file";
    case BackendKind::identity: return "identity";
    case BackendKind::drop_last_word: return "drop_last_word";
    case BackendKind::word_reverse: return "word_reverse";
  }
  return "?";
}

void BackendConfig::validate() const {
  if (kind == BackendKind::http && (!endpoint || endpoint->empty())) {
    throw ContractViolation("http backend '" + name + "' requires an endpoint");
  }
  if (kind == BackendKind::file && !mapping) {
    throw ContractViolation("file backend '" + name + "' requires a mapping file");
  }
  if (max_in_flight < 1) throw ContractViolation("max_in_flight must be positive");
  if (batch_size < 1) throw ContractViolation("batch_size must be positive");
}

std::shared_ptr<TranslationBackend> make_backend(const BackendConfig& c) {
  c.validate();
  switch (c.kind) {
    case BackendKind::identity: return std::make_shared<IdentityBackend>();
    case BackendKind::drop_last_word: return std::make_shared<DropLastWordBackend>();
    case BackendKind::word_reverse: return std::make_shared<WordReverseBackend>();
    case BackendKind::file:
      return std::make_shared<FileBackend>(*c.mapping, c.name.empty() ? "file" : c.name);
    case BackendKind::http: {
      HttpOptions o;
      o.endpoint = *c.endpoint;
      o.auth_env_var = c.auth_env_var;
      o.timeout = c.timeout;
      o.max_in_flight = c.max_in_flight;
      return std::make_shared<HttpBackend>(o, c.name.empty() ? "http" : c.name);
    }
  }
  throw ContractViolation("unknown backend kind");
}

std::vector<std::string> translate_batch(const BackendConfig& config,
                                         std::span<const std::string> texts,
                                         std::string_view source_lang,
                                         std::string_view target_lang,
                                         std::shared_ptr<TranslationCache> cache) {
  if (texts.empty()) throw ContractViolation("translate_batch: empty input");
  auto valid = [](std::string_view c) {
    return c.size() == 3 && std::all_of(c.begin(), c.end(), [](char ch) { return ch >= 'a' && ch <= 'z'; });
  };
  if (!valid(source_lang) || !valid(target_lang)) {
    throw ContractViolation("translate_batch: language codes must be ISO 639-3");
  }
  std::shared_ptr<TranslationBackend> backend = make_backend(config);
  if (cache) backend = std::make_shared<CachedBackend>(backend, cache);
  auto out = backend->translate(texts, source_lang, target_lang);
  if (out.size() != texts.size()) {
    throw BackendError(FailureKind::length_mismatch, backend->name() + ": output batch length differs");
  }
  return out;
}

}  // namespace byol::backends
