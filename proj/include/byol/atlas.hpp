#pragma once

// Language resource tiers: corpus statistics, tier assignment and pathway
// routing.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "byol/io.hpp"

namespace byol::atlas {

enum class ResourceTier { ExtremeLow = 0, Low = 1, Mid = 2, High = 3 };

enum class AdaptationPathway {
  TranslateTest,
  ContinualPretrainAndMerge,
  DirectFinetune,
  NativelySupported,
};

std::string_view to_string(ResourceTier tier);
std::string_view to_string(AdaptationPathway pathway);

// Upper bounds (inclusive) of the first three tiers, in words.
struct TierThresholds {
  std::uint64_t extreme_low_max = 5'000'000;
  std::uint64_t low_max = 2'000'000'000;
  std::uint64_t mid_max = 100'000'000'000;

  void validate() const;
};

struct LanguageProfile {
  std::string code;  // ISO 639-3 shape: three lower-case ASCII letters
  std::string name;
  std::uint64_t word_count = 0;
  std::optional<std::uint64_t> speaker_population;
  std::optional<std::string> script;
};

bool is_iso639_3(std::string_view code);
void require_iso639_3(std::string_view code);

ResourceTier classify_tier(std::uint64_t word_count, const TierThresholds& thresholds = {});
AdaptationPathway route_pathway(ResourceTier tier);

// Words are maximal non-whitespace runs after NFC normalization. Documents are
// counted in parallel; counts combine by addition.
LanguageProfile build_profile(std::string_view code, std::span<const std::string> documents,
                              std::string_view name = {});

// Serial reference used by tests and the benchmark.
std::uint64_t count_words_serial(std::span<const std::string> documents);
std::uint64_t count_words_parallel(std::span<const std::string> documents);

struct AtlasRow {
  std::string code;
  std::string name;
  std::uint64_t word_count;
  std::optional<std::uint64_t> speaker_population;
  ResourceTier tier;
  AdaptationPathway pathway;
};

struct AtlasReport {
  TierThresholds thresholds;
  std::vector<AtlasRow> rows;  // descending word_count, ties by code

  std::string table() const;
  // One JSON row per language for plotting, preceded by a thresholds record.
  std::string rows_jsonl() const;
};

AtlasReport atlas_report(std::span<const LanguageProfile> profiles,
                         const TierThresholds& thresholds = {});

// Profile file: JSON Lines with code, name, word_count, speaker_population,
// script; or, for *.tsv, columns code, name, word_count[, speaker_population].
std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path);

}  // namespace byol::atlas
