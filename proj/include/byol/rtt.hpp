#pragma once

// Domain-conditioned round-trip translation evaluation.
//
//   score = 1/|D| * sum_d ( 1/N_d * sum_i M(s_i, back(forward(s_i))) )
//
// Sentences are averaged within a domain first, then domains are averaged
// uniformly, so a domain with more sentences carries no extra weight.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "byol/backends.hpp"
#include "byol/metrics.hpp"

namespace byol::rtt {

struct BenchmarkSentence {
  std::string id;
  std::string text;
};

struct DomainBenchmark {
  std::map<std::string, std::vector<BenchmarkSentence>> domains;
  std::string pivot_language = "eng";

  std::size_t sentence_count() const;
  // SHA-256 over the canonical (domain, id, text) sequence and pivot language.
  std::string fingerprint() const;
  void validate() const;
};

// Benchmark file: JSON Lines with keys "domain", "id", "text".
DomainBenchmark load_benchmark(const std::filesystem::path& path, std::string pivot = "eng");
DomainBenchmark parse_benchmark(std::string_view content, const std::string& source,
                                std::string pivot = "eng");

enum class Metric { bleu, chrf_pp, cosine };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};  // doubled after each failure
};

struct RttOptions {
  std::set<Metric> metrics{Metric::bleu, Metric::chrf_pp};
  std::string target_language;  // language of the intermediate text
  int concurrency_limit = 4;
  int batch_size = 32;
  RetryPolicy retry;
  // BLEU per domain as corpus BLEU over the domain instead of mean sentence BLEU.
  bool corpus_level_bleu = false;
  // Share of failed sentences above which a domain is flagged invalid.
  double invalid_failure_share = 0.10;
};

struct TranscriptEntry {
  std::string domain;
  std::string id;
  std::string source;
  std::string forward;
  std::string back;
  bool failed = false;
  std::string error;
};

struct DomainResult {
  std::size_t sentences = 0;  // in the benchmark
  std::size_t scored = 0;     // N_d used in the mean
  std::size_t failed = 0;
  bool valid = true;
  std::map<Metric, double> scores;
};

struct RttReport {
  std::string backend;  // "forward>backward"
  std::string forward_backend;
  std::string backward_backend;
  std::string benchmark_fingerprint;
  std::string config_fingerprint;
  std::set<Metric> metrics;
  std::vector<std::string> notes;
  std::map<std::string, DomainResult> domains;
  std::map<Metric, double> macro;  // unweighted mean over valid domains
  std::size_t failed_sentences = 0;
  std::vector<TranscriptEntry> transcript;

  std::string scores_json() const;
  std::string table() const;
  std::string transcript_jsonl() const;
};

RttReport run_round_trip(const DomainBenchmark& benchmark, backends::TranslationBackend& forward,
                         backends::TranslationBackend& backward, const RttOptions& options);

// Rebuilds a report from scores_json() output (transcript excluded).
RttReport parse_report(std::string_view scores_json);

struct LeaderboardEntry {
  std::string backend;
  double macro = 0.0;
};

struct Ranking {
  std::string benchmark_fingerprint;
  std::map<Metric, std::vector<LeaderboardEntry>> leaderboard;              // macro, descending
  std::map<Metric, std::map<std::string, std::string>> domain_winner;       // "" on a tie
  std::map<Metric, std::map<std::string, std::size_t>> domain_wins;         // per backend

  std::string json() const;
  std::string table() const;
};

Ranking rank_backends(std::span<const RttReport> reports);

}  // namespace byol::rtt
