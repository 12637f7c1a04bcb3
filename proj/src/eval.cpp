#include "byol/eval.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <tuple>

#include "byol/error.hpp"
#include "byol/io.hpp"

namespace byol::eval {

using io::Json;

std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::accuracy_0_100: return "accuracy";
    case MetricKind::bleu: return "bleu";
    case MetricKind::chrf_pp: return "chrf_pp";
    case MetricKind::pass_rate: return "pass_rate";
    case MetricKind::unit: return "unit";
  }
  return "?";
}

MetricKind parse_metric_kind(std::string_view s) {
  if (s == "accuracy" || s == "accuracy_0_100") return MetricKind::accuracy_0_100;
  if (s == "bleu") return MetricKind::bleu;
  if (s == "chrf_pp" || s == "chrf++" || s == "chrf") return MetricKind::chrf_pp;
  if (s == "pass_rate") return MetricKind::pass_rate;
  if (s == "unit") return MetricKind::unit;
  throw ContractViolation("unknown metric '" + std::string(s) + "'");
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::include: return "include";
    case Role::translation_use_chrf: return "translation_use_chrf";
    case Role::exclude: return "exclude";
  }
  return "?";
}

Role parse_role(std::string_view s) {
  if (s == "include") return Role::include;
  if (s == "translation_use_chrf" || s == "translation") return Role::translation_use_chrf;
  if (s == "exclude") return Role::exclude;
  throw ContractViolation("unknown role '" + std::string(s) + "'");
}

double normalize_score(MetricKind kind, double value, std::string_view task) {
  const double top = kind == MetricKind::unit ? 1.0 : 100.0;
  if (!(value >= 0.0 && value <= top)) {
    throw ContractViolation("task '" + std::string(task) + "': " + std::string(to_string(kind)) + " value " +
                            io::shortest(value) + " outside [0, " + io::shortest(top) + "]");
  }
  return value / top;
}

namespace {

double metric_value(const BenchmarkResult& r, const std::string& task, std::string_view metric) {
  auto t = r.values.find(task);
  if (t == r.values.end()) {
    throw ContractViolation("model '" + r.model + "' has no result for task '" + task + "'");
  }
  auto m = t->second.find(std::string(metric));
  if (m == t->second.end()) {
    throw ContractViolation("model '" + r.model + "' task '" + task + "' lacks metric '" + std::string(metric) + "'");
  }
  return m->second;
}

}  // namespace

double average_score(const BenchmarkResult& result, std::span<const TaskSpec> specs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : specs) {
    if (s.role == Role::exclude) continue;
    const MetricKind kind = s.role == Role::translation_use_chrf ? MetricKind::chrf_pp : s.kind;
    sum += normalize_score(kind, metric_value(result, s.name, to_string(kind)), s.name);
    ++n;
  }
  if (n == 0) throw ContractViolation("no tasks contribute to the average");
  return 100.0 * sum / static_cast<double>(n);
}

std::vector<ResultRow> parse_results(std::string_view content, const std::string& source) {
  std::vector<ResultRow> rows;
  io::for_each_jsonl(content, source, [&](const Json& j, std::size_t line) {
    try {
      ResultRow r;
      r.model = j.at("model").get<std::string>();
      r.task = j.at("task").get<std::string>();
      r.metric = std::string(to_string(parse_metric_kind(j.at("metric").get<std::string>())));
      r.value = j.at("value").get<double>();
      if (j.contains("lambda")) r.lambda = j.at("lambda").get<double>();
      rows.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw ParseError(source, line, 0, e.what());
    }
  });
  return rows;
}

std::vector<ResultRow> load_results(const std::filesystem::path& path) {
  return parse_results(io::read_file(path), path.string());
}

std::vector<BenchmarkResult> group_results(std::span<const ResultRow> rows) {
  std::vector<BenchmarkResult> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, fresh] = index.emplace(r.model, out.size());
    if (fresh) out.push_back({r.model, {}});
    auto& values = out[it->second].values[r.task];
    if (!values.emplace(r.metric, r.value).second) {
      throw ContractViolation("duplicate result for model '" + r.model + "' task '" + r.task + "' metric '" +
                              r.metric + "'");
    }
  }
  return out;
}

std::vector<TaskSpec> load_task_specs(const std::filesystem::path& path) {
  std::vector<TaskSpec> specs;
  std::set<std::string> seen;
  io::for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    try {
      TaskSpec s;
      s.name = j.at("task").get<std::string>();
      s.kind = parse_metric_kind(j.value("metric", "accuracy"));
      s.role = parse_role(j.value("role", "include"));
      if (!seen.insert(s.name).second) throw ContractViolation("duplicate task spec '" + s.name + "'");
      specs.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw ParseError(path.string(), line, 0, e.what());
    }
  });
  return specs;
}

std::vector<TaskSpec> infer_task_specs(std::span<const ResultRow> rows) {
  std::vector<TaskSpec> specs;
  std::map<std::string, std::set<std::string>> metrics;
  for (const auto& r : rows) {
    if (metrics.find(r.task) == metrics.end()) specs.push_back({r.task, MetricKind::accuracy_0_100, Role::include});
    metrics[r.task].insert(r.metric);
  }
  for (auto& s : specs) {
    const auto& m = metrics[s.name];
    if (m.count("chrf_pp")) {
      s.kind = MetricKind::chrf_pp;
      s.role = Role::translation_use_chrf;
    } else if (m.size() == 1) {
      s.kind = parse_metric_kind(*m.begin());
    } else {
      throw ContractViolation("task '" + s.name + "' reports several metrics; give a task spec");
    }
  }
  return specs;
}

std::string_view to_string(Position p) { return p == Position::first ? "first" : "second"; }
std::string_view to_string(Choice c) { return c == Choice::a ? "a" : "b"; }

void PairwiseJudgment::validate() const {
  if (model_a.empty() || model_b.empty() || model_a == model_b) {
    throw ContractViolation("judgment '" + question_id + "' needs two distinct models");
  }
  if (ratings && (ratings->first < 0 || ratings->first > 5 || ratings->second < 0 || ratings->second > 5)) {
    throw ContractViolation("judgment '" + question_id + "': ratings must lie in 0-5");
  }
}

std::vector<PairwiseJudgment> parse_judgments(std::string_view content, const std::string& source) {
  std::vector<PairwiseJudgment> out;
  io::for_each_jsonl(content, source, [&](const Json& j, std::size_t line) {
    auto fail = [&](const std::string& what) { throw ParseError(source, line, 0, what); };
    try {
      PairwiseJudgment p;
      p.question_id = j.at("question_id").is_string() ? j.at("question_id").get<std::string>()
                                                       : j.at("question_id").dump();
      p.model_a = j.at("model_a").get<std::string>();
      p.model_b = j.at("model_b").get<std::string>();
      const auto pos = j.at("position_of_a").get<std::string>();
      if (pos != "first" && pos != "second") fail("position_of_a must be first or second");
      p.position_of_a = pos == "first" ? Position::first : Position::second;
      const auto pref = j.at("preferred").get<std::string>();
      if (pref != "a" && pref != "b") fail("preferred must be a or b (forced choice, no ties)");
      p.preferred = pref == "a" ? Choice::a : Choice::b;
      if (j.contains("ratings") && !j.at("ratings").is_null()) {
        const auto& r = j.at("ratings");
        if (!r.is_array() || r.size() != 2) fail("ratings must be a two-element array");
        p.ratings = std::make_pair(r[0].get<int>(), r[1].get<int>());
      }
      p.validate();
      out.push_back(std::move(p));
    } catch (const Json::exception& e) {
      fail(e.what());
    }
  });
  return out;
}

std::vector<PairwiseJudgment> load_judgments(const std::filesystem::path& path) {
  return parse_judgments(io::read_file(path), path.string());
}

std::string judgments_to_jsonl(std::span<const PairwiseJudgment> judgments) {
  std::vector<Json> rows;
  for (const auto& p : judgments) {
    Json j{{"question_id", p.question_id},
           {"model_a", p.model_a},
           {"model_b", p.model_b},
           {"position_of_a", to_string(p.position_of_a)},
           {"preferred", to_string(p.preferred)}};
    if (p.ratings) j["ratings"] = {p.ratings->first, p.ratings->second};
    rows.push_back(std::move(j));
  }
  return io::to_jsonl(rows);
}

double OpponentRecord::win_rate() const {
  const auto n = wins + losses;
  return n == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(n);
}

double WinRateReport::overall_win_rate() const {
  return judgments == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(judgments);
}

double WinRateReport::position_bias() const {
  return judgments == 0 ? 0.0 : static_cast<double>(first_position_wins) / static_cast<double>(judgments);
}

WinRateReport aggregate_pairwise(std::span<const PairwiseJudgment> judgments, const std::string& focus) {
  WinRateReport report;
  report.focus = focus;
  std::map<std::string, OpponentRecord> by_opponent;
  for (const auto& p : judgments) {
    p.validate();
    const bool focus_is_a = p.model_a == focus;
    if (!focus_is_a && p.model_b != focus) {
      throw ContractViolation("judgment '" + p.question_id + "' does not involve focus model '" + focus + "'");
    }
    const std::string& opponent = focus_is_a ? p.model_b : p.model_a;
    auto& rec = by_opponent[opponent];
    rec.opponent = opponent;
    const bool won = (p.preferred == Choice::a) == focus_is_a;
    ++(won ? rec.wins : rec.losses);
    report.wins += won;
    report.first_position_wins += p.first_presented_won();
    ++report.judgments;
  }
  for (auto& [_, rec] : by_opponent) report.opponents.push_back(std::move(rec));
  return report;
}

std::string WinRateReport::table() const {
  std::vector<std::vector<std::string>> rows;
  for (const auto& o : opponents) {
    rows.push_back({o.opponent, std::to_string(o.wins), std::to_string(o.losses), io::fixed(100.0 * o.win_rate())});
  }
  rows.push_back({"overall", std::to_string(wins), std::to_string(judgments - wins),
                  io::fixed(100.0 * overall_win_rate())});
  return io::render_table({focus + " vs", "wins", "losses", "win %"}, rows) +
         "first-presented answer won " + io::fixed(100.0 * position_bias()) + "% of " + std::to_string(judgments) +
         " judgments\n";
}

std::string WinRateReport::json() const {
  Json opp = Json::array();
  for (const auto& o : opponents) {
    opp.push_back({{"opponent", o.opponent}, {"wins", o.wins}, {"losses", o.losses}, {"win_rate", o.win_rate()}});
  }
  Json j{{"focus", focus},
         {"judgments", judgments},
         {"wins", wins},
         {"overall_win_rate", overall_win_rate()},
         {"first_position_wins", first_position_wins},
         {"position_bias", position_bias()},
         {"opponents", opp}};
  return j.dump(2) + "\n";
}

std::string WinRateReport::plot_rows_jsonl() const {
  std::vector<Json> rows;
  for (const auto& o : opponents) {
    rows.push_back({{"focus", focus},
                    {"opponent", o.opponent},
                    {"wins", o.wins},
                    {"losses", o.losses},
                    {"win_rate", o.win_rate()},
                    {"loss_rate", 1.0 - o.win_rate()}});
  }
  return io::to_jsonl(rows);
}

namespace {

std::string metric_label(std::string_view metric) {
  if (metric == "bleu") return "BLEU";
  if (metric == "chrf_pp") return "chrF++";
  return std::string(metric);
}

// (label, task, metric) display rows for a set of specs.
std::vector<std::tuple<std::string, std::string, std::string>> display_rows(std::span<const TaskSpec> specs,
                                                                            std::span<const BenchmarkResult> results) {
  std::vector<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& s : specs) {
    if (s.role == Role::translation_use_chrf) {
      const bool any_bleu = std::any_of(results.begin(), results.end(), [&](const BenchmarkResult& r) {
        auto t = r.values.find(s.name);
        return t != r.values.end() && t->second.count("bleu");
      });
      if (any_bleu) out.emplace_back(s.name + " " + metric_label("bleu"), s.name, "bleu");
      out.emplace_back(s.name + " " + metric_label("chrf_pp"), s.name, "chrf_pp");
    } else {
      out.emplace_back(s.name, s.name, std::string(to_string(s.kind)));
    }
  }
  return out;
}

std::string cell(const BenchmarkResult& r, const std::string& task, const std::string& metric) {
  auto t = r.values.find(task);
  if (t == r.values.end()) return "-";
  auto m = t->second.find(metric);
  return m == t->second.end() ? "-" : io::fixed(m->second);
}

std::string lambda_label(double l) {
  const double tenths = l * 10.0;
  return std::abs(tenths - std::round(tenths)) < 1e-9 ? io::fixed(l, 1) : io::shortest(l);
}

}  // namespace

std::string render_score_table(std::span<const BenchmarkResult> results, std::span<const TaskSpec> specs) {
  std::vector<std::string> header{"Task"};
  for (const auto& r : results) header.push_back(r.model);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [label, task, metric] : display_rows(specs, results)) {
    std::vector<std::string> row{label};
    for (const auto& r : results) row.push_back(cell(r, task, metric));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> avg{"Average Score"};
  for (const auto& r : results) avg.push_back(io::fixed(average_score(r, specs)));
  rows.push_back(std::move(avg));
  return io::render_table(header, rows);
}

std::string render_score_rows(std::span<const BenchmarkResult> results, std::span<const TaskSpec> specs) {
  std::vector<Json> rows;
  for (const auto& r : results) {
    for (const auto& [label, task, metric] : display_rows(specs, results)) {
      auto t = r.values.find(task);
      if (t == r.values.end() || !t->second.count(metric)) continue;
      rows.push_back({{"model", r.model}, {"task", task}, {"metric", metric}, {"value", t->second.at(metric)}});
    }
    rows.push_back({{"model", r.model}, {"task", "average"}, {"metric", "average_score"},
                    {"value", average_score(r, specs)}});
  }
  return io::to_jsonl(rows);
}

std::vector<SweepPoint> sweep_points(std::span<const ResultRow> rows, std::span<const TaskSpec> specs,
                                     const std::map<std::string, double>& model_lambdas) {
  std::map<std::string, double> lambda_of;
  for (const auto& r : rows) {
    std::optional<double> l = r.lambda;
    if (!l) {
      auto it = model_lambdas.find(r.model);
      if (it != model_lambdas.end()) l = it->second;
    }
    if (!l) throw ContractViolation("no lambda known for model '" + r.model + "'");
    auto [it, fresh] = lambda_of.emplace(r.model, *l);
    if (!fresh && it->second != *l) throw ContractViolation("model '" + r.model + "' has conflicting lambdas");
  }
  std::vector<SweepPoint> points;
  std::set<double> seen;
  for (auto& res : group_results(rows)) {
    const double l = lambda_of.at(res.model);
    if (!seen.insert(l).second) throw ContractViolation("two models share lambda " + io::shortest(l));
    const double avg = average_score(res, specs);
    points.push_back({l, std::move(res), avg});
  }
  std::sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.lambda < b.lambda; });
  return points;
}

std::string render_sweep_table(std::span<const SweepPoint> points, std::span<const TaskSpec> specs) {
  std::vector<std::string> header{"Task"};
  std::vector<BenchmarkResult> results;
  for (const auto& p : points) {
    header.push_back(lambda_label(p.lambda));
    results.push_back(p.result);
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [label, task, metric] : display_rows(specs, results)) {
    std::vector<std::string> row{label};
    for (const auto& r : results) row.push_back(cell(r, task, metric));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> avg{"Average Score"};
  for (const auto& p : points) avg.push_back(io::fixed(p.average));
  rows.push_back(std::move(avg));
  return io::render_table(header, rows);
}

std::string render_sweep_curve(std::span<const SweepPoint> points) {
  std::vector<Json> rows;
  for (const auto& p : points) {
    rows.push_back({{"lambda", p.lambda}, {"model", p.result.model}, {"average", p.average},
                    {"average_display", io::fixed(p.average)}});
  }
  return io::to_jsonl(rows);
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& fields) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string key(tmpl.substr(open + 1, close - open - 1));
    auto it = fields.find(key);
    if (it != fields.end()) {
      out += it->second;
    } else {
      const bool placeholder = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
      });
      if (placeholder) throw ContractViolation("template placeholder {" + key + "} has no value");
      out.append(tmpl.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

JudgeVerdict parse_judge_verdict(std::string_view response) {
  const std::string text(response);
  static const std::regex comparison(R"(Comparison:\s*([\s\S]*?)\s*\n\s*Preferred:)");
  static const std::regex preferred(R"(Preferred:\s*\"?\s*Answer\s*\(([AB])\)\s*\"?\s*(\n|$))");
  static const std::regex rating_a(R"(Rating output A:\s*\[?\s*([0-9]+)\s*\]?)");
  static const std::regex rating_b(R"(Rating output B:\s*\[?\s*([0-9]+)\s*\]?)");
  std::smatch m;
  JudgeVerdict v;
  if (!std::regex_search(text, m, comparison)) throw ContractViolation("judge response lacks a Comparison field");
  v.comparison = m[1].str();
  if (!std::regex_search(text, m, preferred)) {
    throw ContractViolation("judge response must prefer \"Answer (A)\" or \"Answer (B)\"");
  }
  v.preferred_slot = m[1].str() == "A" ? Position::first : Position::second;
  auto rating = [&](const std::regex& re, const char* which) {
    if (!std::regex_search(text, m, re)) throw ContractViolation(std::string("judge response lacks rating ") + which);
    const int r = std::stoi(m[1].str());
    if (r < 0 || r > 5) throw ContractViolation(std::string("judge rating ") + which + " outside 0-5");
    return r;
  };
  v.rating_first = rating(rating_a, "A");
  v.rating_second = rating(rating_b, "B");
  return v;
}

PairwiseJudgment to_judgment(const JudgeVerdict& v, std::string question_id, std::string model_a,
                             std::string model_b, Position position_of_a) {
  PairwiseJudgment p;
  p.question_id = std::move(question_id);
  p.model_a = std::move(model_a);
  p.model_b = std::move(model_b);
  p.position_of_a = position_of_a;
  p.preferred = v.preferred_slot == position_of_a ? Choice::a : Choice::b;
  const bool a_first = position_of_a == Position::first;
  p.ratings = a_first ? std::make_pair(v.rating_first, v.rating_second)
                      : std::make_pair(v.rating_second, v.rating_first);
  p.validate();
  return p;
}

}  // namespace byol::eval
