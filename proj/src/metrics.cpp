#include "byol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "byol/text.hpp"

namespace byol::metrics {

namespace {

using NgramCounts = std::unordered_map<std::string, std::uint64_t>;

// Joins the tokens of an n-gram into one map key.
constexpr char kSep = '\x1f';

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back(kSep);
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

NgramCounts count_char_ngrams(const std::u32string& chars, int n) {
  NgramCounts counts;
  if (chars.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= chars.size(); ++i) {
    ++counts[text::encode(std::u32string_view(chars).substr(i, n))];
  }
  return counts;
}

std::uint64_t total_of(const NgramCounts& c) {
  std::uint64_t t = 0;
  for (const auto& [_, v] : c) t += v;
  return t;
}

std::uint64_t overlap(const NgramCounts& hyp, const NgramCounts& ref) {
  std::uint64_t m = 0;
  for (const auto& [k, v] : hyp) {
    if (auto it = ref.find(k); it != ref.end()) m += std::min(v, it->second);
  }
  return m;
}

void require_refs(std::span<const std::string> references, const char* op) {
  if (references.empty()) throw ContractViolation(std::string(op) + ": reference list is empty");
}

}  // namespace

MetricScore MetricScore::make(double value, Scale scale) {
  double lo = 0.0, hi = 100.0;
  if (scale == Scale::unit_interval) hi = 1.0;
  if (scale == Scale::signed_unit) lo = -1.0, hi = 1.0;
  if (!(value >= lo && value <= hi)) {
    throw ContractViolation("metric value " + std::to_string(value) + " outside its scale");
  }
  return {value, scale};
}

void BleuConfig::validate() const {
  if (max_ngram_order < 1 || max_ngram_order > 9) {
    throw ContractViolation("BLEU max_ngram_order must be in [1, 9]");
  }
}

void ChrfConfig::validate() const {
  if (char_ngram_order < 1 || word_ngram_order < 1) {
    throw ContractViolation("chrF++ n-gram orders must be >= 1");
  }
  if (!(beta > 0.0)) throw ContractViolation("chrF++ beta must be positive");
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size(), 0);
    totals.resize(other.totals.size(), 0);
  }
  for (std::size_t i = 0; i < other.matches.size(); ++i) {
    matches[i] += other.matches[i];
    totals[i] += other.totals[i];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

std::vector<std::string> tokenize(std::string_view s, Tokenizer tokenizer) {
  if (tokenizer == Tokenizer::whitespace) return text::split_ws(text::nfc(s));
  return text::tokenize_international(s);
}

BleuStats bleu_stats(std::string_view candidate, std::span<const std::string> references,
                     const BleuConfig& config) {
  require_refs(references, "bleu");
  config.validate();
  const auto cand = tokenize(candidate, config.tokenizer);
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(tokenize(r, config.tokenizer));

  BleuStats s;
  s.candidate_length = cand.size();
  // Closest reference length; ties go to the shorter one.
  std::uint64_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::uint64_t len) {
      return len > s.candidate_length ? len - s.candidate_length : s.candidate_length - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  s.reference_length = best;

  const int orders = config.max_ngram_order;
  s.matches.assign(orders, 0);
  s.totals.assign(orders, 0);
  for (int n = 1; n <= orders; ++n) {
    const NgramCounts hyp = count_ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [k, v] : count_ngrams(r, n)) {
        auto& slot = max_ref[k];
        slot = std::max(slot, v);
      }
    }
    s.matches[n - 1] = overlap(hyp, max_ref);
    s.totals[n - 1] = total_of(hyp);
  }
  return s;
}

double bleu_from_stats(const BleuStats& s, const BleuConfig& config) {
  if (s.candidate_length == 0) return 0.0;
  // No n-gram of any order matched: 0 under every smoothing mode.
  if (std::all_of(s.matches.begin(), s.matches.end(), [](std::uint64_t m) { return m == 0; })) return 0.0;
  double log_sum = 0.0;
  int effective = 0;
  double exp_factor = 1.0;
  for (std::size_t i = 0; i < s.totals.size(); ++i) {
    const auto m = static_cast<double>(s.matches[i]);
    const auto t = static_cast<double>(s.totals[i]);
    double p = 0.0;
    switch (config.smoothing) {
      case Smoothing::none:
        if (s.matches[i] == 0) return 0.0;
        p = m / t;
        break;
      case Smoothing::add_one_from_order2:
        if (s.totals[i] == 0) continue;
        if (i == 0) {
          if (s.matches[0] == 0) return 0.0;
          p = m / t;
        } else {
          p = (m + 1.0) / (t + 1.0);
        }
        break;
      case Smoothing::exponential:
        if (s.totals[i] == 0) continue;
        if (s.matches[i] == 0) {
          exp_factor *= 2.0;
          p = 1.0 / (exp_factor * t);
        } else {
          p = m / t;
        }
        break;
    }
    log_sum += std::log(p);
    ++effective;
  }
  if (effective == 0) return 0.0;
  const auto c = static_cast<double>(s.candidate_length);
  const auto r = static_cast<double>(s.reference_length);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(100.0 * bp * std::exp(log_sum / effective), 0.0, 100.0);
}

MetricScore sentence_bleu(std::string_view candidate, std::span<const std::string> references,
                          const BleuConfig& config) {
  return MetricScore::make(bleu_from_stats(bleu_stats(candidate, references, config), config),
                           Scale::percent_0_100);
}

MetricScore corpus_bleu(std::span<const CandidateRefs> pairs, const BleuConfig& config) {
  if (pairs.empty()) throw ContractViolation("corpus_bleu: empty corpus");
  BleuStats total;
  for (const auto& p : pairs) total += bleu_stats(p.candidate, p.references, config);
  return MetricScore::make(bleu_from_stats(total, config), Scale::percent_0_100);
}

namespace {

std::u32string chrf_chars(std::string_view s) {
  std::u32string out;
  for (char32_t cp : text::decode(text::nfc(s))) {
    if (!text::is_space(cp)) out.push_back(cp);
  }
  return out;
}

double chrf_single(std::string_view candidate, std::string_view reference, const ChrfConfig& cfg) {
  const auto hyp_chars = chrf_chars(candidate);
  const auto ref_chars = chrf_chars(reference);
  const auto hyp_words = text::tokenize_international(candidate);
  const auto ref_words = text::tokenize_international(reference);

  double precision_sum = 0.0, recall_sum = 0.0;
  int orders = 0;
  auto add = [&](const NgramCounts& hyp, const NgramCounts& ref) {
    const std::uint64_t ht = total_of(hyp), rt = total_of(ref);
    if (ht == 0 && rt == 0) return;  // order absent on both sides
    const auto m = static_cast<double>(overlap(hyp, ref));
    precision_sum += ht ? m / static_cast<double>(ht) : 0.0;
    recall_sum += rt ? m / static_cast<double>(rt) : 0.0;
    ++orders;
  };
  for (int n = 1; n <= cfg.char_ngram_order; ++n) {
    add(count_char_ngrams(hyp_chars, n), count_char_ngrams(ref_chars, n));
  }
  for (int n = 1; n <= cfg.word_ngram_order; ++n) {
    add(count_ngrams(hyp_words, n), count_ngrams(ref_words, n));
  }
  if (orders == 0) return 100.0;  // both sides empty
  const double p = precision_sum / orders;
  const double r = recall_sum / orders;
  if (p + r == 0.0) return 0.0;
  const double b2 = cfg.beta * cfg.beta;
  return std::clamp(100.0 * (1.0 + b2) * p * r / (b2 * p + r), 0.0, 100.0);
}

}  // namespace

MetricScore chrf_pp(std::string_view candidate, std::span<const std::string> references,
                    const ChrfConfig& config) {
  require_refs(references, "chrf_pp");
  config.validate();
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, chrf_single(candidate, r, config));
  return MetricScore::make(best, Scale::percent_0_100);
}

MetricScore cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine_similarity: dimensions " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNormVector("cosine_similarity: zero-norm vector");
  const double v = dot / (std::sqrt(na) * std::sqrt(nb));
  return MetricScore::make(std::clamp(v, -1.0, 1.0), Scale::signed_unit);
}

}  // namespace byol::metrics
