#include <doctest.h>

#include <random>

#include "byol/atlas.hpp"
#include "byol/error.hpp"
#include "support.hpp"

using namespace byol::atlas;

TEST_CASE("tier boundaries are upper-inclusive") {
  CHECK(classify_tier(0) == ResourceTier::ExtremeLow);
  CHECK(classify_tier(5'000'000) == ResourceTier::ExtremeLow);
  CHECK(classify_tier(5'000'001) == ResourceTier::Low);
  CHECK(classify_tier(2'000'000'000) == ResourceTier::Low);
  CHECK(classify_tier(2'000'000'001) == ResourceTier::Mid);
  CHECK(classify_tier(100'000'000'000) == ResourceTier::Mid);
  CHECK(classify_tier(100'000'000'001) == ResourceTier::High);
}

TEST_CASE("tier is monotone in word count") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = rng() % 200'000'000'000ULL, b = rng() % 200'000'000'000ULL;
    const auto lo = std::min(a, b), hi = std::max(a, b);
    CHECK(static_cast<int>(classify_tier(lo)) <= static_cast<int>(classify_tier(hi)));
  }
}

TEST_CASE("pathway routing") {
  CHECK(route_pathway(ResourceTier::ExtremeLow) == AdaptationPathway::TranslateTest);
  CHECK(route_pathway(ResourceTier::Low) == AdaptationPathway::ContinualPretrainAndMerge);
  CHECK(route_pathway(ResourceTier::High) == AdaptationPathway::NativelySupported);
  CHECK(to_string(ResourceTier::ExtremeLow) == "extreme-low");
}

TEST_CASE("thresholds must increase") {
  TierThresholds t;
  t.low_max = t.extreme_low_max;
  CHECK_THROWS_AS(t.validate(), byol::ContractViolation);
  CHECK_THROWS_AS(classify_tier(1, t), byol::ContractViolation);
}

TEST_CASE("iso codes") {
  CHECK(is_iso639_3("nya"));
  CHECK_FALSE(is_iso639_3("NYA"));
  CHECK_FALSE(is_iso639_3("ny"));
  CHECK_THROWS_AS(require_iso639_3("en"), byol::ContractViolation);
}

TEST_CASE("parallel word count matches serial") {
  std::vector<std::string> docs;
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string d;
    for (int w = 0, n = static_cast<int>(rng() % 40); w < n; ++w) d += (rng() % 3 ? "word " : " \t ᓄᓇ\n");
    docs.push_back(d);
  }
  CHECK(count_words_parallel(docs) == count_words_serial(docs));
  const auto p = build_profile("nya", docs, "Chichewa");
  CHECK(p.word_count == count_words_serial(docs));
}

TEST_CASE("profiles load and report sorts descending") {
  const auto profiles = load_profiles(support::fixture("langs.tsv"));
  REQUIRE(profiles.size() == 3);
  const auto report = atlas_report(profiles);
  CHECK(report.rows.front().code == "eng");
  CHECK(report.rows.back().code == "nya");
  CHECK(report.rows.back().tier == ResourceTier::ExtremeLow);
  CHECK(report.table().find("translate-test") != std::string::npos);
  CHECK(report.rows_jsonl().find("\"thresholds\"") != std::string::npos);
}
