#pragma once

// Deterministic bitext and monolingual corpus processing.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byol/io.hpp"

namespace byol::refinery {

enum class Origin { human, synthetic_backtranslated, synthetic_mt };
std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

struct SentencePair {
  std::string source;
  std::string target;
  Origin origin = Origin::human;
  std::string provenance;
  std::vector<std::string> lineage;

  bool operator==(const SentencePair&) const = default;
};

struct FilterConfig {
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 256;
  double max_char_ratio = 1.3;
  bool dedup = true;

  void validate() const;
};

enum class RejectReason { duplicate, length, ratio };
std::string_view to_string(RejectReason r);

struct Rejection {
  std::size_t record_index;
  RejectReason reason;
  std::string detail;
};

struct FilterResult {
  std::vector<SentencePair> kept;
  std::vector<std::size_t> kept_index;  // input positions of `kept`
  std::vector<Rejection> rejections;    // ascending record_index
};

// Whitespace-delimited token count.
std::size_t count_tokens(std::string_view s);

// NFC, trim, collapse internal whitespace; case preserved.
std::string dedup_normal_form(std::string_view s);

// Keeps a pair iff it is not a duplicate of an earlier kept pair, both sides
// have [min_tokens, max_tokens] tokens, and the symmetric character-length
// ratio is at most max_char_ratio. Each rejection carries one reason, by
// precedence duplicate > length > ratio. Per-record predicates run in
// parallel; dedup is a sequential pass in input order.
FilterResult filter_pairs(std::span<const SentencePair> pairs, const FilterConfig& config = {});

// Single-threaded reference with the same contract.
FilterResult filter_pairs_serial(std::span<const SentencePair> pairs, const FilterConfig& config = {});

struct MonolingualResult {
  std::vector<std::string> kept;
  std::vector<Rejection> rejections;
};

// Dedup and token-length bounds on single texts; kept lines are byte-identical
// to their input.
MonolingualResult clean_monolingual(std::span<const std::string> lines,
                                    const FilterConfig& rules = {});

struct AugmentationConfig {
  double p_punct_removal = 0.1;
  double p_diacritic_strip = 0.1;
  double p_case_variation = 0.1;
  double p_copy = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Draws come from a counter-based stream keyed by (seed, record_index), so the
// result depends only on the pair, the config and the index. Punctuation
// removal and diacritic stripping act on the source side; case variation acts
// on both sides; copy replaces the source with the target. Applied transforms
// append their names to the lineage. A transform that would empty a side is
// skipped.
SentencePair augment_pair(const SentencePair& pair, const AugmentationConfig& config,
                          std::uint64_t record_index);

class TransliterationTable {
 public:
  TransliterationTable() = default;
  // Throws ContractViolation on an empty or duplicate key, or invalid UTF-8.
  void add(std::string key, std::string replacement);

  static TransliterationTable from_tsv(const std::filesystem::path& path);
  static TransliterationTable from_tsv_content(std::string_view content, const std::string& source);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  // Single left-to-right pass; at each position the longest matching key is
  // consumed. Unmatched code points pass through.
  std::string apply(std::string_view text) const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::size_t max_key_bytes_ = 0;
};

std::string transliterate(std::string_view text, const TransliterationTable& table);

enum class MixUnit { pairs, tokens };
std::string_view to_string(MixUnit u);
MixUnit parse_mix_unit(std::string_view s);

struct MixComponent {
  std::string name;
  std::vector<std::string> records;
  double weight = 1.0;
};

struct MixtureSpec {
  std::vector<MixComponent> components;
  MixUnit unit = MixUnit::tokens;
  // Requested mixture size in units. When absent the largest mixture the
  // components can supply at the requested proportions is built.
  std::optional<std::uint64_t> total_units;
  std::function<std::size_t(std::string_view)> token_counter;  // defaults to count_tokens

  void validate() const;
};

struct MixedRecord {
  std::size_t component;
  std::string text;
};

struct ComponentManifest {
  std::string name;
  double weight = 0.0;
  double target_share = 0.0;
  std::uint64_t available_units = 0;
  std::uint64_t quota_units = 0;
  std::uint64_t selected_units = 0;
  std::size_t selected_records = 0;
  double realized_share = 0.0;
};

struct MixManifest {
  MixUnit unit = MixUnit::tokens;
  std::uint64_t seed = 0;
  std::uint64_t total_units = 0;
  std::vector<ComponentManifest> components;

  std::string json() const;
};

struct MixResult {
  std::vector<MixedRecord> records;  // seeded interleaving
  MixManifest manifest;
};

// Errors (ContractViolation naming the component and its shortfall) when a
// component cannot supply its share of `total_units`. Never oversamples.
MixResult mix_corpora(const MixtureSpec& spec, std::uint64_t seed);

// Bitext I/O: "source<TAB>target" per line, or JSON Lines with source,
// target and optional origin, provenance, lineage (chosen by extension .jsonl).
std::vector<SentencePair> load_bitext(const std::filesystem::path& path);
std::string bitext_to_jsonl(std::span<const SentencePair> pairs);
std::string bitext_to_tsv(std::span<const SentencePair> pairs);
std::string rejections_to_jsonl(std::span<const Rejection> rejections);

}  // namespace byol::refinery
