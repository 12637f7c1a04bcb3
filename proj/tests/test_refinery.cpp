#include <doctest.h>

#include <fstream>
#include <random>

#include "byol/error.hpp"
#include "byol/refinery.hpp"
#include "support.hpp"

using namespace byol::refinery;

namespace {

std::string words(std::mt19937& rng, int n) {
  static const char* vocab[] = {"mvula", "madzi", "nyumba", "galu", "mphaka", "sukulu", "msika", "mtengo"};
  std::string s;
  for (int i = 0; i < n; ++i) s += std::string(i ? " " : "") + vocab[rng() % 8];
  return s;
}

std::vector<SentencePair> random_pairs(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<SentencePair> out;
  for (int i = 0; i < n; ++i) {
    const int k = 1 + static_cast<int>(rng() % 12);
    out.push_back({words(rng, k), words(rng, 1 + static_cast<int>(rng() % 12))});
  }
  return out;
}

}  // namespace

TEST_CASE("filter reasons follow precedence") {
  const std::vector<SentencePair> pairs{
      {"one two three", "uno dos tres"},
      {"one  two three ", "uno dos tres"},       // duplicate after normalization
      {"one two", "uno dos tres"},               // too short
      {"aa bb cc", "aaaaaaa bbbbbbb ccccccc"},  // ratio
  };
  const auto r = filter_pairs(pairs);
  REQUIRE(r.rejections.size() == 3);
  CHECK(r.rejections[0].reason == RejectReason::duplicate);
  CHECK(r.rejections[1].reason == RejectReason::length);
  CHECK(r.rejections[2].reason == RejectReason::ratio);
  CHECK(r.kept_index == std::vector<std::size_t>{0});
}

TEST_CASE("a rejected pair does not shadow a later copy") {
  const std::vector<SentencePair> pairs{{"a b", "c d"}, {"a b", "c d"}};
  const auto r = filter_pairs(pairs);
  CHECK(r.rejections.size() == 2);
  CHECK(r.rejections[0].reason == RejectReason::length);
  CHECK(r.rejections[1].reason == RejectReason::length);
}

TEST_CASE("parallel filter equals serial and is idempotent") {
  for (unsigned seed : {1u, 2u, 3u}) {
    auto pairs = random_pairs(800, seed);
    for (int i = 0; i < 50; ++i) pairs.push_back(pairs[static_cast<std::size_t>(i * 7)]);
    const auto a = filter_pairs(pairs), b = filter_pairs_serial(pairs);
    CHECK(a.kept == b.kept);
    CHECK(a.kept_index == b.kept_index);
    REQUIRE(a.rejections.size() == b.rejections.size());
    for (std::size_t i = 0; i < a.rejections.size(); ++i) {
      CHECK(a.rejections[i].record_index == b.rejections[i].record_index);
      CHECK(a.rejections[i].reason == b.rejections[i].reason);
    }
    CHECK(a.kept.size() + a.rejections.size() == pairs.size());
    const auto again = filter_pairs(a.kept);
    CHECK(again.kept == a.kept);
    CHECK(again.rejections.empty());
  }
}

TEST_CASE("filter config is validated") {
  FilterConfig c;
  c.max_char_ratio = 0.5;
  CHECK_THROWS_AS(c.validate(), byol::ContractViolation);
  c = {};
  c.min_tokens = 10;
  c.max_tokens = 5;
  CHECK_THROWS_AS(c.validate(), byol::ContractViolation);
}

TEST_CASE("monolingual cleaning keeps bytes") {
  const std::vector<std::string> lines{"one two  three", "one two three", "short", "a b c d"};
  const auto r = clean_monolingual(lines);
  CHECK(r.kept == std::vector<std::string>{"one two  three", "a b c d"});
  CHECK(r.rejections.size() == 2);
}

TEST_CASE("augmentation is a pure function of pair, config and index") {
  AugmentationConfig cfg{0.5, 0.5, 0.5, 0.2, 42};
  const SentencePair p{"Café, crème! Brûlée?", "Target Side Text."};
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto a = augment_pair(p, cfg, i);
    CHECK(a == augment_pair(p, cfg, i));
    CHECK_FALSE(a.source.empty());
    CHECK_FALSE(a.target.empty());
    if (a.source != p.source || a.target != p.target) CHECK_FALSE(a.lineage.empty());
  }
  AugmentationConfig off{0, 0, 0, 0, 42};
  CHECK(augment_pair(p, off, 3).source == p.source);
  AugmentationConfig punct{1, 0, 0, 0, 1};
  CHECK(augment_pair({"Hello, world!", "x y"}, punct, 0).source == "Hello world");
  AugmentationConfig dia{0, 1, 0, 0, 1};
  CHECK(augment_pair({"Malaŵi café", "x"}, dia, 0).source == "Malawi cafe");
  AugmentationConfig copy{0, 0, 0, 1, 1};
  CHECK(augment_pair({"a", "b"}, copy, 0).source == "b");
  AugmentationConfig bad{1.5, 0, 0, 0, 1};
  CHECK_THROWS_AS(bad.validate(), byol::ContractViolation);
}

TEST_CASE("transliteration takes the longest match") {
  const auto t = TransliterationTable::from_tsv(support::fixture("syllabics.tsv"));
  CHECK(t.apply("ᓄᓇ") == "nuna");
  CHECK(t.apply("ᐃᓄᒃᑎᑐᑦ") == "inuktitut");
  CHECK(t.apply("x ᓄ y") == "x nu y");
  TransliterationTable dup;
  dup.add("a", "b");
  CHECK_THROWS_AS(dup.add("a", "c"), byol::ContractViolation);
  CHECK_THROWS_AS(dup.add("", "c"), byol::ContractViolation);
}

TEST_CASE("mixing honors proportions without oversampling") {
  std::vector<std::string> a(300, "x y"), b(100, "p q r s");
  MixtureSpec spec;
  spec.components = {{"a", a, 1.0}, {"b", b, 1.0}};
  const auto r = mix_corpora(spec, 9);
  for (const auto& c : r.manifest.components) CHECK(c.realized_share == doctest::Approx(0.5).epsilon(0.01));
  CHECK(r.manifest.components[0].selected_records <= a.size());
  CHECK(r.manifest.components[1].selected_records <= b.size());
  const auto again = mix_corpora(spec, 9);
  REQUIRE(again.records.size() == r.records.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) CHECK(r.records[i].text == again.records[i].text);
  CHECK(r.manifest.json() == again.manifest.json());

  spec.total_units = 100000;
  CHECK_THROWS_AS(mix_corpora(spec, 9), byol::ContractViolation);
}

TEST_CASE("pair-unit mixing of equal corpora is exact") {
  std::vector<std::string> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back("real " + std::to_string(i));
    b.push_back("synthetic " + std::to_string(i));
  }
  MixtureSpec spec;
  spec.unit = MixUnit::pairs;
  spec.components = {{"real", a, 1.0}, {"synthetic", b, 1.0}};
  const auto r = mix_corpora(spec, 1);
  CHECK(r.manifest.components[0].selected_units == r.manifest.components[1].selected_units);
  CHECK(r.manifest.components[0].realized_share == 0.5);
}

TEST_CASE("bitext loading from tsv and jsonl") {
  const auto pairs = load_bitext(support::fixture("pipeline_bitext.tsv"));
  CHECK(pairs.size() == 124);
  support::TempDir dir("bitext");
  std::ofstream(dir / "b.jsonl") << bitext_to_jsonl(std::span(pairs).first(3));
  const auto back = load_bitext(dir / "b.jsonl");
  CHECK(back == std::vector<SentencePair>(pairs.begin(), pairs.begin() + 3));
}
