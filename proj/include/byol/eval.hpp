#pragma once

// Benchmark score normalization, average scores, pairwise judgment
// aggregation and report rendering.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace byol::eval {

// accuracy, bleu, chrf_pp and pass_rate are reported on 0-100; unit values
// are already in [0, 1].
enum class MetricKind { accuracy_0_100, bleu, chrf_pp, pass_rate, unit };
std::string_view to_string(MetricKind k);
MetricKind parse_metric_kind(std::string_view s);

enum class Role { include, translation_use_chrf, exclude };
std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct TaskSpec {
  std::string name;
  MetricKind kind = MetricKind::accuracy_0_100;
  Role role = Role::include;
};

struct BenchmarkResult {
  std::string model;
  std::map<std::string, std::map<std::string, double>> values;  // task -> metric -> value
};

// Value in [0, 1]. Out-of-range values throw ContractViolation naming `task`.
double normalize_score(MetricKind kind, double value, std::string_view task = {});

// Unweighted mean of normalized included values, times 100. Translation tasks
// contribute their chrF++ value only.
double average_score(const BenchmarkResult& result, std::span<const TaskSpec> specs);

// One row of a results file.
struct ResultRow {
  std::string model;
  std::string task;
  std::string metric;
  double value = 0.0;
  std::optional<double> lambda;
};

std::vector<ResultRow> load_results(const std::filesystem::path& path);
std::vector<ResultRow> parse_results(std::string_view content, const std::string& source);
// Grouped by model, models in first-appearance order. Duplicate
// (model, task, metric) rows throw.
std::vector<BenchmarkResult> group_results(std::span<const ResultRow> rows);

// Task specs file: JSON Lines with task, metric, role.
std::vector<TaskSpec> load_task_specs(const std::filesystem::path& path);
// Tasks in first-appearance order; a task reporting chrf_pp is a translation
// task, otherwise its single metric is included.
std::vector<TaskSpec> infer_task_specs(std::span<const ResultRow> rows);

enum class Position { first, second };
enum class Choice { a, b };
std::string_view to_string(Position p);
std::string_view to_string(Choice c);

struct PairwiseJudgment {
  std::string question_id;
  std::string model_a;
  std::string model_b;
  Position position_of_a = Position::first;
  Choice preferred = Choice::a;
  std::optional<std::pair<int, int>> ratings;  // (a, b), each 0-5

  void validate() const;
  bool first_presented_won() const {
    return (preferred == Choice::a) == (position_of_a == Position::first);
  }
};

std::vector<PairwiseJudgment> load_judgments(const std::filesystem::path& path);
std::vector<PairwiseJudgment> parse_judgments(std::string_view content, const std::string& source);
std::string judgments_to_jsonl(std::span<const PairwiseJudgment> judgments);

struct OpponentRecord {
  std::string opponent;
  std::size_t wins = 0;
  std::size_t losses = 0;
  double win_rate() const;
};

struct WinRateReport {
  std::string focus;
  std::vector<OpponentRecord> opponents;  // by opponent name
  std::size_t judgments = 0;
  std::size_t wins = 0;
  std::size_t first_position_wins = 0;

  double overall_win_rate() const;
  // Fraction of judgments won by the first-presented answer.
  double position_bias() const;
  std::string table() const;
  std::string json() const;
  std::string plot_rows_jsonl() const;
};

WinRateReport aggregate_pairwise(std::span<const PairwiseJudgment> judgments, const std::string& focus);

// Task rows by model columns with a closing average row; values rounded half
// to even at two decimals.
std::string render_score_table(std::span<const BenchmarkResult> results, std::span<const TaskSpec> specs);
// Full-precision rows for plotting: one per (model, task, metric) plus one
// average per model.
std::string render_score_rows(std::span<const BenchmarkResult> results, std::span<const TaskSpec> specs);

struct SweepPoint {
  double lambda;
  BenchmarkResult result;
  double average;
};

// Points ordered by increasing lambda. A row's lambda comes from its own
// field, or else from `model_lambdas` keyed by model name.
std::vector<SweepPoint> sweep_points(std::span<const ResultRow> rows, std::span<const TaskSpec> specs,
                                     const std::map<std::string, double>& model_lambdas = {});
std::string render_sweep_table(std::span<const SweepPoint> points, std::span<const TaskSpec> specs);
std::string render_sweep_curve(std::span<const SweepPoint> points);

// Replaces each {KEY} with its value. Throws if a {UPPER_CASE} placeholder
// remains unfilled.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& fields);

struct JudgeVerdict {
  std::string comparison;
  Position preferred_slot = Position::first;  // Answer (A) is the first slot
  int rating_first = 0;
  int rating_second = 0;
};

// Parses the judge response format. Throws ContractViolation when a field is
// missing or the preference is not one of the two answers.
JudgeVerdict parse_judge_verdict(std::string_view response);

// Maps a verdict over presented slots back onto the model pair.
PairwiseJudgment to_judgment(const JudgeVerdict& v, std::string question_id, std::string model_a,
                             std::string model_b, Position position_of_a);

}  // namespace byol::eval
