#pragma once

// Shared configuration, run manifests, structured logging and the
// end-to-end mock pipeline used by the command-line tool.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "byol/atlas.hpp"
#include "byol/backends.hpp"
#include "byol/io.hpp"
#include "byol/refinery.hpp"
#include "byol/rtt.hpp"

namespace byol::pipeline {

namespace fs = std::filesystem;
using io::Json;

inline constexpr const char* kVersion = "0.1.0";

struct MixSource {
  std::string name;
  fs::path path;
  double weight = 1.0;
};

struct MixSettings {
  refinery::MixUnit unit = refinery::MixUnit::tokens;
  std::optional<std::uint64_t> total_units;
  std::vector<MixSource> components;
};

struct RttSettings {
  std::string forward = "identity";
  std::string backward = "identity";
  std::string target_language = "nya";
  std::set<rtt::Metric> metrics{rtt::Metric::bleu, rtt::Metric::chrf_pp};
  int batch_size = 32;
  rtt::RetryPolicy retry;
  bool corpus_level_bleu = false;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int concurrency_limit = 4;
  std::optional<fs::path> cache_dir;
  fs::path report_dir = "byol-out";
  atlas::TierThresholds tiers;
  refinery::FilterConfig filter;
  refinery::AugmentationConfig augment;  // seed is derived per stage
  MixSettings mix;
  RttSettings rtt;
  std::map<std::string, backends::BackendConfig> backends;
  // Named inputs: profiles, benchmark, bitext, g_pt, g_it, expert, results,
  // judgments, tasks, transliteration.
  std::map<std::string, fs::path> paths;
  double lambda = 0.6;

  // Relative paths resolve against `base_dir`. Unknown keys throw.
  static PipelineConfig from_json(const Json& j, const fs::path& base_dir = {});
  Json to_json() const;
  // SHA-256 of the canonical JSON form.
  std::string fingerprint() const;
  // Every referenced path exists and every backend definition is valid.
  void validate() const;
};

PipelineConfig load_config(const fs::path& path);

// BYOL_CACHE_DIR overrides the configured cache directory.
void apply_environment(PipelineConfig& config);

// A configured backend name, a mock kind name, or "file:PATH". Wrapped in the
// persistent cache when a cache directory is configured; a non-deterministic
// backend without one is a contract violation.
std::shared_ptr<backends::TranslationBackend> resolve_backend(const PipelineConfig& config,
                                                              const std::string& spec);

// One JSON object per line: event, stage, duration_ms, counts.
class EventLog {
 public:
  explicit EventLog(std::ostream* out) : out_(out) {}
  void emit(const std::string& stage, double duration_ms, const Json& counts = Json::object(),
            const std::string& event = "stage_done");

 private:
  std::ostream* out_;
  std::mutex mutex_;
};

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const;

 private:
  std::chrono::steady_clock::time_point start_;
};

// Manifest written by every run: subcommand, version, seed, config
// fingerprint and SHA-256 of each named input and output file.
Json run_manifest(const std::string& subcommand, const PipelineConfig& config,
                  const std::map<std::string, fs::path>& inputs, const std::vector<fs::path>& outputs);
fs::path write_manifest(const fs::path& dir, const std::string& subcommand, const Json& manifest);

// Reads one mixture component: non-blank lines of a text file, or records of
// a .jsonl file kept verbatim.
refinery::MixComponent load_mix_component(const MixSource& source);
// Token count of a mixture record: whitespace words, over the text, source
// and target fields when the record is a JSON object.
std::size_t mix_record_tokens(std::string_view record);

// Converts an RTT report into result rows (task per domain, backend as model).
std::vector<Json> report_result_rows(const rtt::RttReport& report);

// classify -> filter -> mix -> rtt-eval -> merge -> score, writing every
// machine-readable artifact under `out_dir`. Returns the written files.
std::vector<fs::path> run_pipeline(const PipelineConfig& config, const fs::path& out_dir, EventLog* log = nullptr);

}  // namespace byol::pipeline
