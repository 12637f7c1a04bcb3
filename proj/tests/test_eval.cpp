#include <doctest.h>

#include <random>
#include <sstream>

#include "byol/digest.hpp"
#include "byol/error.hpp"
#include "byol/eval.hpp"
#include "byol/io.hpp"
#include "support.hpp"

using namespace byol::eval;

TEST_CASE("normalization ranges") {
  CHECK(normalize_score(MetricKind::accuracy_0_100, 64.5) == doctest::Approx(0.645));
  CHECK(normalize_score(MetricKind::unit, 0.5) == 0.5);
  CHECK_THROWS_AS(normalize_score(MetricKind::accuracy_0_100, 100.5, "x"), byol::ContractViolation);
  CHECK_THROWS_AS(normalize_score(MetricKind::unit, 2.0, "x"), byol::ContractViolation);
}

TEST_CASE("translation tasks count their chrF++ only") {
  const BenchmarkResult r{"m", {{"acc", {{"accuracy", 50.0}}}, {"mt", {{"bleu", 10.0}, {"chrf_pp", 30.0}}}}};
  const std::vector<TaskSpec> specs{{"acc", MetricKind::accuracy_0_100, Role::include},
                                    {"mt", MetricKind::chrf_pp, Role::translation_use_chrf}};
  CHECK(average_score(r, specs) == doctest::Approx(40.0));
  const std::vector<TaskSpec> excl{{"acc", MetricKind::accuracy_0_100, Role::include},
                                   {"mt", MetricKind::chrf_pp, Role::exclude}};
  CHECK(average_score(r, excl) == doctest::Approx(50.0));
  const std::vector<TaskSpec> missing{{"nope", MetricKind::accuracy_0_100, Role::include}};
  CHECK_THROWS_AS(average_score(r, missing), byol::ContractViolation);
}

TEST_CASE("average reconstructs the 12B row") {
  const auto rows = load_results(support::fixture("byol_nya_12b_results.jsonl"));
  const auto specs = infer_task_specs(rows);
  CHECK(specs.size() == 13);
  const auto results = group_results(rows);
  REQUIRE(results.size() == 1);
  const double avg = average_score(results[0], specs);
  CHECK(avg == doctest::Approx(57.2592).epsilon(1e-6));
  CHECK(std::abs(avg - 57.26) <= 0.05);
  const auto table = render_score_table(results, specs);
  CHECK(table.find("57.26") != std::string::npos);
}

TEST_CASE("duplicate result rows are rejected") {
  const auto rows = parse_results(
      "{\"model\":\"m\",\"task\":\"t\",\"metric\":\"accuracy\",\"value\":1}\n"
      "{\"model\":\"m\",\"task\":\"t\",\"metric\":\"accuracy\",\"value\":2}\n",
      "mem");
  CHECK_THROWS_AS(group_results(rows), byol::ContractViolation);
}

TEST_CASE("sweep points order by lambda and take lambdas from a map") {
  const std::string content =
      "{\"model\":\"b\",\"task\":\"t\",\"metric\":\"accuracy\",\"value\":40}\n"
      "{\"model\":\"a\",\"task\":\"t\",\"metric\":\"accuracy\",\"value\":20}\n";
  const auto rows = parse_results(content, "mem");
  const auto specs = infer_task_specs(rows);
  const auto pts = sweep_points(rows, specs, {{"a", 0.2}, {"b", 0.9}});
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].lambda == 0.2);
  CHECK(pts[1].average == doctest::Approx(40.0));
  CHECK_THROWS_AS(sweep_points(rows, specs), byol::ContractViolation);
  CHECK(render_sweep_curve(pts).find("\"lambda\":0.2") != std::string::npos);
}

TEST_CASE("pairwise aggregation") {
  std::vector<PairwiseJudgment> js{
      {"1", "us", "them", Position::first, Choice::a, std::nullopt},
      {"2", "us", "them", Position::second, Choice::b, std::nullopt},
      {"3", "them", "us", Position::first, Choice::b, std::make_pair(2, 4)},
      {"4", "us", "other", Position::first, Choice::b, std::nullopt},
  };
  const auto r = aggregate_pairwise(js, "us");
  CHECK(r.judgments == 4);
  CHECK(r.wins == 2);
  CHECK(r.overall_win_rate() == 0.5);
  // Judgments 1 and 2 were won by the first-presented answer; 3 and 4 by the second.
  CHECK(r.position_bias() == 0.5);
  REQUIRE(r.opponents.size() == 2);
  CHECK(r.opponents[0].opponent == "other");
  CHECK(r.opponents[0].win_rate() == 0.0);
  CHECK(r.opponents[1].wins == 2);
  CHECK(r.json().find("position_bias") != std::string::npos);
  CHECK_THROWS_AS(aggregate_pairwise(js, "nobody"), byol::ContractViolation);
}

TEST_CASE("judgment parsing enforces forced choice") {
  const auto ok = parse_judgments(
      "{\"question_id\":1,\"model_a\":\"x\",\"model_b\":\"y\",\"position_of_a\":\"second\",\"preferred\":\"a\"}\n", "mem");
  REQUIRE(ok.size() == 1);
  CHECK_FALSE(ok[0].first_presented_won());
  CHECK(parse_judgments(judgments_to_jsonl(ok), "mem")[0].question_id == "1");
  CHECK_THROWS_AS(
      parse_judgments("{\"question_id\":1,\"model_a\":\"x\",\"model_b\":\"y\",\"position_of_a\":\"first\",\"preferred\":\"tie\"}\n", "mem"),
      byol::ParseError);
}

TEST_CASE("prompt templates and judge verdicts") {
  const auto tmpl = byol::io::read_file(std::filesystem::path(BYOL_DATA) / "prompts/judge.txt");
  CHECK_THROWS_AS(render_template(tmpl, {{"LANGUAGE_NAME", "Chichewa"}}), byol::ContractViolation);
  const auto filled = render_template(tmpl, {{"LANGUAGE_NAME", "Chichewa"}, {"CONTEXT", "c"}, {"QUESTION", "q"},
                                             {"ANSWER", "a"}, {"COMPLETION_A", "x"}, {"COMPLETION_B", "y"}});
  CHECK(filled.find("Answer (A): x") != std::string::npos);
  CHECK(render_template("keep {lower} {X}", {{"X", "1"}}) == "keep {lower} 1");

  const auto v = parse_judge_verdict(
      "Comparison: B is more fluent.\nPreferred: \"Answer (B)\"\nRating output A: 2\nRating output B: 4\n");
  CHECK(v.preferred_slot == Position::second);
  CHECK(v.rating_second == 4);
  // Model "us" was shown second, so preferring slot B means "us" won.
  const auto j = to_judgment(v, "q1", "us", "them", Position::second);
  CHECK(j.preferred == Choice::a);
  CHECK(j.ratings == std::make_pair(4, 2));
  CHECK_THROWS_AS(parse_judge_verdict("Comparison: x\nPreferred: Neither\nRating output A: 1\nRating output B: 1\n"),
                  byol::ContractViolation);
}
