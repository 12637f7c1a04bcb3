#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "byol/align.hpp"
#include "byol/io.hpp"
#include "support.hpp"

using namespace byol::align;

namespace {

ValidationReport check(const std::string& name) {
  const auto src = byol::io::read_lines(support::fixture("align_source_doc.txt"));
  const auto tgt = byol::io::read_lines(support::fixture("align_target_doc.txt"));
  return validate_alignment(parse_alignment_records(support::fixture(name)), src, tgt);
}

bool has_rule(const ValidationReport& r, const std::string& rule) {
  for (const auto& v : r.rejections) {
    if (v.rule == rule) return true;
  }
  return false;
}

// Multiset trigram Jaccard written out directly.
double trigram_jaccard(const std::string& a, const std::string& b) {
  std::map<std::string, int> x, y;
  for (std::size_t i = 0; i + 3 <= a.size(); ++i) ++x[a.substr(i, 3)];
  for (std::size_t i = 0; i + 3 <= b.size(); ++i) ++y[b.substr(i, 3)];
  int mn = 0, mx = 0;
  std::set<std::string> keys;
  for (auto& [k, _] : x) keys.insert(k);
  for (auto& [k, _] : y) keys.insert(k);
  for (const auto& k : keys) {
    mn += std::min(x[k], y[k]);
    mx += std::max(x[k], y[k]);
  }
  return mx ? static_cast<double>(mn) / mx : 0.0;
}

}  // namespace

TEST_CASE("overlap ratio hand example") {
  CHECK(overlap_ratio("abcdef", "abcxyz") == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
  CHECK(overlap_ratio("Same Text", "same  text") == 1.0);
  CHECK(overlap_ratio("ab", "ab") == 1.0);
  CHECK(overlap_ratio("ab", "cd") == 0.0);
}

TEST_CASE("overlap ratio matches an independent multiset oracle") {
  std::mt19937 rng(17);
  for (int i = 0; i < 500; ++i) {
    auto gen = [&] {
      std::string s;
      for (int k = 0, n = 3 + static_cast<int>(rng() % 12); k < n; ++k) s += static_cast<char>('a' + rng() % 4);
      return s;
    };
    const auto a = gen(), b = gen();
    const double r = overlap_ratio(a, b);
    CHECK(r == doctest::Approx(trigram_jaccard(a, b)).epsilon(1e-12));
    CHECK(r == overlap_ratio(b, a));
    const bool rejected = has_rule(validate_alignment(std::vector<AlignmentRecord>{{{a}, {b}}}, std::nullopt,
                                                      std::nullopt),
                                   "same_language");
    CHECK(rejected == (r > 0.70));
  }
}

TEST_CASE("fixture outcomes") {
  const auto valid = check("align_valid.jsonl");
  CHECK(valid.accepted == valid.total);
  CHECK(valid.rejections.empty());
  CHECK(valid.source_order_evaluated);

  const auto swapped = check("align_swapped.jsonl");
  CHECK(has_rule(swapped, "monotonicity"));
  const auto overlap = check("align_overlap.jsonl");
  CHECK(has_rule(overlap, "overlap"));
  const auto same = check("align_same_language.jsonl");
  CHECK(has_rule(same, "same_language"));

  const auto mixed = check("align_mixed_types.jsonl");
  CHECK(mixed.histogram.at("1-1") == 2);
  CHECK(mixed.histogram.at("M-1") == 1);
}

TEST_CASE("without documents order is not evaluated") {
  const auto r = validate_alignment(parse_alignment_records(support::fixture("align_swapped.jsonl")), std::nullopt,
                                    std::nullopt);
  CHECK(r.accepted == 2);
  CHECK_FALSE(r.source_order_evaluated);
  CHECK(r.summary().find("not evaluated") != std::string::npos);
}

TEST_CASE("malformed lines become parse rejections") {
  const auto parsed = parse_alignment_content(
      "{\"source\":[\"a\"],\"target\":[\"b\"]}\n{\"source\":\"a\",\"target\":[]}\n{\"source\":[],\"target\":[\"x\"],\"extra\":1}\nnope\n",
      "mem");
  CHECK(parsed.total == 4);
  CHECK(parsed.records.size() == 1);
  CHECK(parsed.failures.size() == 3);
  CHECK(parsed.failures[0].line == 2);
  const auto r = validate_alignment(parsed, std::nullopt, std::nullopt);
  CHECK(r.rejections.size() == 3);
  CHECK(r.rejections[0].rule == "parse");
}

TEST_CASE("empty segments are rejected") {
  const std::vector<AlignmentRecord> recs{{{"  "}, {"x"}}, {{}, {"x"}}};
  const auto r = validate_alignment(recs, std::nullopt, std::nullopt);
  CHECK(r.rejections.size() == 2);
  CHECK(r.rejections[0].rule == "non_empty");
}
