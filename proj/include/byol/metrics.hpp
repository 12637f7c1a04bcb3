#pragma once

// Fidelity metrics: BLEU, chrF++ and cosine similarity, all from scratch.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "byol/error.hpp"

namespace byol::metrics {

enum class Scale { percent_0_100, unit_interval, signed_unit };

struct MetricScore {
  double value = 0.0;
  Scale scale = Scale::percent_0_100;

  // Throws ContractViolation when `value` lies outside the scale's range.
  static MetricScore make(double value, Scale scale);
};

enum class Smoothing { none, add_one_from_order2, exponential };
enum class Tokenizer { international, whitespace };

struct BleuConfig {
  int max_ngram_order = 4;
  Smoothing smoothing = Smoothing::exponential;
  Tokenizer tokenizer = Tokenizer::international;

  static BleuConfig sentence_default() { return {}; }
  static BleuConfig corpus_default() { return {4, Smoothing::none, Tokenizer::international}; }
  void validate() const;
};

struct ChrfConfig {
  int char_ngram_order = 6;
  int word_ngram_order = 2;
  double beta = 2.0;

  void validate() const;
};

// Sufficient statistics of one candidate against its references. Corpus BLEU
// sums these before computing precisions, so aggregation is exact integer
// addition and independent of partitioning.
struct BleuStats {
  std::vector<std::uint64_t> matches;  // clipped, per order
  std::vector<std::uint64_t> totals;   // candidate n-grams, per order
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;  // closest reference length

  BleuStats& operator+=(const BleuStats& other);
};

std::vector<std::string> tokenize(std::string_view text, Tokenizer tokenizer);

BleuStats bleu_stats(std::string_view candidate, std::span<const std::string> references,
                     const BleuConfig& config);

// 100 * BP * exp(mean log precision) over the accumulated statistics.
double bleu_from_stats(const BleuStats& stats, const BleuConfig& config);

MetricScore sentence_bleu(std::string_view candidate, std::span<const std::string> references,
                          const BleuConfig& config = BleuConfig::sentence_default());

struct CandidateRefs {
  std::string candidate;
  std::vector<std::string> references;
};

MetricScore corpus_bleu(std::span<const CandidateRefs> pairs,
                        const BleuConfig& config = BleuConfig::corpus_default());

MetricScore chrf_pp(std::string_view candidate, std::span<const std::string> references,
                    const ChrfConfig& config = {});

class DimensionMismatch : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class ZeroNormVector : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

MetricScore cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace byol::metrics
