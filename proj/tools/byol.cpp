// byol: command-line entry point. Every subcommand loads the shared config,
// applies flag overrides, calls the library and writes a run manifest.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "byol/align.hpp"
#include "byol/atlas.hpp"
#include "byol/backends.hpp"
#include "byol/digest.hpp"
#include "byol/error.hpp"
#include "byol/eval.hpp"
#include "byol/io.hpp"
#include "byol/merge.hpp"
#include "byol/metrics.hpp"
#include "byol/pipeline.hpp"
#include "byol/refinery.hpp"
#include "byol/rtt.hpp"
#include "byol/tensor.hpp"
#include "byol/text.hpp"

namespace {

namespace fs = std::filesystem;
using namespace byol;
using pipeline::Json;
using pipeline::PipelineConfig;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::string cache_dir;
  std::string report_dir;
  bool quiet = false;
};

class Run {
 public:
  Run(const Globals& g, std::string subcommand) : subcommand_(std::move(subcommand)), log_(g.quiet ? nullptr : &std::cerr) {
    if (!g.config_path.empty()) config_ = pipeline::load_config(g.config_path);
    pipeline::apply_environment(config_);
    if (g.seed) config_.seed = *g.seed;
    if (g.concurrency) config_.concurrency_limit = *g.concurrency;
    if (!g.cache_dir.empty()) config_.cache_dir = fs::path(g.cache_dir);
    if (!g.report_dir.empty()) config_.report_dir = g.report_dir;
  }

  PipelineConfig& config() { return config_; }
  pipeline::EventLog& log() { return log_; }

  // Validates the effective config; call after flag overrides.
  void start() {
    config_.validate();
    log_.emit(subcommand_, 0.0, {{"seed", config_.seed}, {"config_fingerprint", config_.fingerprint()}}, "run_start");
  }

  fs::path out_dir(const std::string& flag) const { return flag.empty() ? config_.report_dir : fs::path(flag); }

  void write(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_file(path, content);
    outputs_.push_back(path);
  }
  void produced(const fs::path& path) { outputs_.push_back(path); }
  void input(const std::string& name, const fs::path& path) { inputs_[name] = path; }

  void finish(const fs::path& manifest_dir, const Json& counts = Json::object()) {
    pipeline::write_manifest(manifest_dir, subcommand_,
                             pipeline::run_manifest(subcommand_, config_, inputs_, outputs_));
    log_.emit(subcommand_, timer_.elapsed_ms(), counts);
  }

 private:
  std::string subcommand_;
  PipelineConfig config_;
  pipeline::EventLog log_;
  pipeline::StageTimer timer_;
  std::map<std::string, fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

// Flag value if given, else the configured path, else a contract violation.
fs::path pick_path(const std::string& flag, const PipelineConfig& c, const std::string& key, const char* option) {
  if (!flag.empty()) return flag;
  if (auto it = c.paths.find(key); it != c.paths.end()) return it->second;
  throw ContractViolation(std::string("missing ") + option + " (or paths." + key + " in the config)");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<std::vector<std::string>> read_doc(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::vector<std::string> lines;
  for (auto& l : io::read_lines(path)) {
    if (text::count_words(l) > 0) lines.push_back(std::move(l));
  }
  return lines;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string profiles, out, format = "table";
};

void classify(const Globals& g, const ClassifyArgs& a) {
  Run run(g, "classify");
  run.start();
  const fs::path profiles = pick_path(a.profiles, run.config(), "profiles", "--profiles");
  run.input("profiles", profiles);
  const auto report = atlas::atlas_report(atlas::load_profiles(profiles), run.config().tiers);
  std::cout << (a.format == "jsonl" ? report.rows_jsonl() : report.table());
  const fs::path out = run.out_dir(a.out);
  run.write(out / "atlas.jsonl", report.rows_jsonl());
  run.finish(out, {{"languages", report.rows.size()}});
}

struct RttArgs {
  std::string benchmark, forward, backward, target_lang, metrics, out;
  std::optional<int> batch_size, retries;
  bool corpus_bleu = false;
};

void rtt_eval(const Globals& g, const RttArgs& a) {
  Run run(g, "rtt-eval");
  auto& c = run.config();
  if (!a.forward.empty()) c.rtt.forward = a.forward;
  if (!a.backward.empty()) c.rtt.backward = a.backward;
  if (!a.target_lang.empty()) c.rtt.target_language = a.target_lang;
  if (!a.metrics.empty()) {
    c.rtt.metrics.clear();
    for (const auto& m : split_commas(a.metrics)) c.rtt.metrics.insert(rtt::parse_metric(m));
  }
  if (a.batch_size) c.rtt.batch_size = *a.batch_size;
  if (a.retries) c.rtt.retry.attempts = *a.retries;
  if (a.corpus_bleu) c.rtt.corpus_level_bleu = true;
  run.start();
  const fs::path bench_path = pick_path(a.benchmark, c, "benchmark", "--benchmark");
  run.input("benchmark", bench_path);
  const auto bench = rtt::load_benchmark(bench_path);
  auto forward = pipeline::resolve_backend(c, c.rtt.forward);
  auto backward = pipeline::resolve_backend(c, c.rtt.backward);
  rtt::RttOptions o;
  o.metrics = c.rtt.metrics;
  o.target_language = c.rtt.target_language;
  o.concurrency_limit = c.concurrency_limit;
  o.batch_size = c.rtt.batch_size;
  o.retry = c.rtt.retry;
  o.corpus_level_bleu = c.rtt.corpus_level_bleu;
  const auto report = rtt::run_round_trip(bench, *forward, *backward, o);
  std::cout << report.table();
  const fs::path out = run.out_dir(a.out);
  run.write(out / "scores.json", report.scores_json());
  run.write(out / "transcript.jsonl", report.transcript_jsonl());
  run.finish(out, {{"sentences", bench.sentence_count()}, {"failed", report.failed_sentences}});
}

struct RankArgs {
  std::vector<std::string> reports;
  std::string out;
};

void rank(const Globals& g, const RankArgs& a) {
  Run run(g, "rank");
  run.start();
  std::vector<rtt::RttReport> reports;
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    run.input("report" + std::to_string(i), a.reports[i]);
    reports.push_back(rtt::parse_report(io::read_file(a.reports[i])));
  }
  const auto ranking = rtt::rank_backends(reports);
  std::cout << ranking.table();
  const fs::path out = run.out_dir(a.out);
  run.write(out / "ranking.json", ranking.json());
  run.finish(out, {{"backends", reports.size()}});
}

struct FilterArgs {
  std::string input, out;
  std::optional<std::size_t> min_tokens, max_tokens;
  std::optional<double> max_ratio;
  bool no_dedup = false, monolingual = false;
};

void filter(const Globals& g, const FilterArgs& a) {
  Run run(g, "filter");
  auto& c = run.config();
  if (a.min_tokens) c.filter.min_tokens = *a.min_tokens;
  if (a.max_tokens) c.filter.max_tokens = *a.max_tokens;
  if (a.max_ratio) c.filter.max_char_ratio = *a.max_ratio;
  if (a.no_dedup) c.filter.dedup = false;
  run.start();
  const fs::path input = pick_path(a.input, c, "bitext", "--input");
  run.input("input", input);
  const fs::path out = run.out_dir(a.out);
  Json counts;
  if (a.monolingual) {
    const auto lines = io::read_lines(input);
    const auto result = refinery::clean_monolingual(lines, c.filter);
    std::string kept;
    for (const auto& l : result.kept) kept += l + "\n";
    run.write(out / "kept.txt", kept);
    run.write(out / "rejections.jsonl", refinery::rejections_to_jsonl(result.rejections));
    counts = {{"input", lines.size()}, {"kept", result.kept.size()}, {"rejected", result.rejections.size()}};
  } else {
    const auto pairs = refinery::load_bitext(input);
    const auto result = refinery::filter_pairs(pairs, c.filter);
    run.write(out / "kept.jsonl", refinery::bitext_to_jsonl(result.kept));
    run.write(out / "rejections.jsonl", refinery::rejections_to_jsonl(result.rejections));
    counts = {{"input", pairs.size()}, {"kept", result.kept.size()}, {"rejected", result.rejections.size()}};
  }
  std::cout << counts.dump() << "\n";
  run.finish(out, counts);
}

struct AugmentArgs {
  std::string input, out;
  std::uint64_t epoch = 0;
  std::optional<double> p_punct, p_diacritic, p_case, p_copy;
};

void augment(const Globals& g, const AugmentArgs& a) {
  Run run(g, "augment");
  auto& c = run.config();
  if (a.p_punct) c.augment.p_punct_removal = *a.p_punct;
  if (a.p_diacritic) c.augment.p_diacritic_strip = *a.p_diacritic;
  if (a.p_case) c.augment.p_case_variation = *a.p_case;
  if (a.p_copy) c.augment.p_copy = *a.p_copy;
  run.start();
  const fs::path input = pick_path(a.input, c, "bitext", "--input");
  run.input("input", input);
  auto cfg = c.augment;
  cfg.seed = stage_seed(c.seed, "augment/epoch" + std::to_string(a.epoch));
  const auto pairs = refinery::load_bitext(input);
  std::vector<refinery::SentencePair> out_pairs;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out_pairs.push_back(refinery::augment_pair(pairs[i], cfg, i));
    changed += out_pairs.back().lineage.size() != pairs[i].lineage.size();
  }
  const fs::path out = run.out_dir(a.out);
  run.write(out / "augmented.jsonl", refinery::bitext_to_jsonl(out_pairs));
  run.finish(out, {{"pairs", pairs.size()}, {"augmented", changed}});
}

struct TranslitArgs {
  std::string table, input, out, side = "source";
};

void transliterate(const Globals& g, const TranslitArgs& a) {
  Run run(g, "transliterate");
  run.start();
  const fs::path table_path = pick_path(a.table, run.config(), "transliteration", "--table");
  run.input("table", table_path);
  run.input("input", a.input);
  const auto table = refinery::TransliterationTable::from_tsv(table_path);
  const fs::path out = a.out.empty() ? run.config().report_dir / fs::path(a.input).filename() : fs::path(a.out);
  if (fs::path(a.input).extension() == ".jsonl") {
    if (a.side != "source" && a.side != "target" && a.side != "both") {
      throw ContractViolation("--side must be source, target or both");
    }
    auto pairs = refinery::load_bitext(a.input);
    for (auto& p : pairs) {
      if (a.side != "target") p.source = table.apply(p.source);
      if (a.side != "source") p.target = table.apply(p.target);
    }
    run.write(out, refinery::bitext_to_jsonl(pairs));
  } else {
    std::string result;
    for (const auto& line : io::read_lines(a.input)) result += table.apply(line) + "\n";
    run.write(out, result);
  }
  run.finish(out.parent_path().empty() ? fs::path(".") : out.parent_path());
}

struct MixArgs {
  std::vector<std::string> components;
  std::string unit, out;
  std::optional<std::uint64_t> total;
};

pipeline::MixSource parse_component(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ContractViolation("--component must be NAME=PATH[:WEIGHT]");
  pipeline::MixSource s;
  s.name = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      s.weight = std::stod(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1) throw std::invalid_argument("weight");
      rest = rest.substr(0, colon);
    } catch (const std::exception&) {
      s.weight = 1.0;  // the colon belongs to the path
    }
  }
  s.path = rest;
  return s;
}

void mix(const Globals& g, const MixArgs& a) {
  Run run(g, "mix");
  auto& c = run.config();
  if (!a.components.empty()) {
    c.mix.components.clear();
    for (const auto& spec : a.components) c.mix.components.push_back(parse_component(spec));
  }
  if (!a.unit.empty()) c.mix.unit = refinery::parse_mix_unit(a.unit);
  if (a.total) c.mix.total_units = *a.total;
  run.start();
  if (c.mix.components.empty()) throw ContractViolation("mix needs at least one --component");
  refinery::MixtureSpec spec;
  spec.unit = c.mix.unit;
  spec.total_units = c.mix.total_units;
  spec.token_counter = pipeline::mix_record_tokens;
  for (const auto& m : c.mix.components) {
    run.input("component:" + m.name, m.path);
    spec.components.push_back(pipeline::load_mix_component(m));
  }
  const auto result = refinery::mix_corpora(spec, stage_seed(c.seed, "mix"));
  std::vector<Json> rows;
  for (const auto& r : result.records) rows.push_back({{"component", spec.components[r.component].name}, {"record", r.text}});
  const fs::path out = run.out_dir(a.out);
  run.write(out / "mixed.jsonl", io::to_jsonl(rows));
  run.write(out / "mix_manifest.json", result.manifest.json());
  std::cout << result.manifest.json();
  run.finish(out, {{"records", result.records.size()}, {"units", result.manifest.total_units}});
}

struct AlignArgs {
  std::string records, source_doc, target_doc, out;
  double threshold = 0.70;
  bool strict = false;
};

int align_check(const Globals& g, const AlignArgs& a) {
  Run run(g, "align-check");
  run.start();
  run.input("records", a.records);
  if (!a.source_doc.empty()) run.input("source_doc", a.source_doc);
  if (!a.target_doc.empty()) run.input("target_doc", a.target_doc);
  const auto parsed = align::parse_alignment_records(a.records);
  align::ValidationOptions o;
  o.overlap_threshold = a.threshold;
  const auto report = align::validate_alignment(parsed, read_doc(a.source_doc), read_doc(a.target_doc), o);
  std::cout << report.summary();
  const fs::path out = run.out_dir(a.out);
  run.write(out / "violations.jsonl", report.violations_jsonl());
  run.write(out / "alignment_summary.txt", report.summary());
  run.finish(out, {{"records", report.total}, {"accepted", report.accepted}, {"rejected", report.rejections.size()}});
  return a.strict && !report.rejections.empty() ? static_cast<int>(ExitCode::contract_violation) : 0;
}

struct MergeArgs {
  std::string g_pt, g_it, expert, out, grid, pattern;
  std::optional<double> alpha, beta, lambda;
};

struct Triple {
  tensor::TensorCheckpoint g_pt, g_it, expert;
};

Triple load_triple(Run& run, const MergeArgs& a) {
  const auto& c = run.config();
  const fs::path pt = pick_path(a.g_pt, c, "g_pt", "--g-pt");
  const fs::path it = pick_path(a.g_it, c, "g_it", "--g-it");
  const fs::path ex = pick_path(a.expert, c, "expert", "--expert");
  run.input("g_pt", pt);
  run.input("g_it", it);
  run.input("expert", ex);
  return {tensor::load_checkpoint(pt), tensor::load_checkpoint(it), tensor::load_checkpoint(ex)};
}

void sweep_cmd(const Globals& g, const MergeArgs& a) {
  Run run(g, "sweep");
  run.start();
  if (a.grid.empty()) throw ContractViolation("sweep needs --sweep START:STOP:STEP or a comma list");
  const Triple t = load_triple(run, a);
  merge::SweepSpec spec;
  spec.lambdas = merge::parse_lambda_grid(a.grid);
  if (!a.pattern.empty()) spec.pattern = a.pattern;
  const fs::path out = run.out_dir(a.out);
  const auto manifest = merge::sweep(t.g_pt, t.g_it, t.expert, spec, out);
  for (const auto& e : manifest.entries) run.produced(e.file);
  run.write(out / "sweep_manifest.json", manifest.json());
  std::cout << manifest.json();
  run.finish(out, {{"checkpoints", manifest.entries.size()}});
}

void merge_cmd(const Globals& g, const MergeArgs& a) {
  if (!a.grid.empty()) return sweep_cmd(g, a);
  Run run(g, "merge");
  if (a.lambda) run.config().lambda = *a.lambda;
  run.start();
  merge::MergeRecipe recipe;
  if (a.alpha || a.beta) {
    if (!a.alpha || !a.beta) throw ContractViolation("--alpha and --beta go together");
    recipe = merge::MergeRecipe::from_coefficients(*a.alpha, *a.beta);
  } else {
    recipe = merge::MergeRecipe::from_lambda(run.config().lambda);
  }
  const Triple t = load_triple(run, a);
  const auto merged = merge::merge(t.g_pt, t.g_it, t.expert, recipe);
  const fs::path out = a.out.empty() ? run.config().report_dir / "merged.byt" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  tensor::save_checkpoint(merged, out);
  run.produced(out);
  std::cout << Json{{"file", out.string()}, {"fingerprint", merged.fingerprint()}, {"alpha", recipe.alpha},
                    {"beta", recipe.beta}}.dump()
            << "\n";
  run.finish(out.parent_path().empty() ? fs::path(".") : out.parent_path(), {{"tensors", merged.tensors.size()}});
}

struct AverageArgs {
  std::vector<std::string> inputs;
  std::string out;
};

void average(const Globals& g, const AverageArgs& a) {
  Run run(g, "average");
  run.start();
  std::vector<tensor::TensorCheckpoint> ckpts;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    run.input("input" + std::to_string(i), a.inputs[i]);
    ckpts.push_back(tensor::load_checkpoint(a.inputs[i]));
  }
  const auto avg = merge::average_checkpoints(ckpts);
  const fs::path out = a.out.empty() ? run.config().report_dir / "averaged.byt" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  tensor::save_checkpoint(avg, out);
  run.produced(out);
  std::cout << Json{{"file", out.string()}, {"fingerprint", avg.fingerprint()}, {"count", ckpts.size()}}.dump() << "\n";
  run.finish(out.parent_path().empty() ? fs::path(".") : out.parent_path(), {{"checkpoints", ckpts.size()}});
}

struct ScoreArgs {
  std::string results, tasks, hyp, ref, out;
};

std::vector<eval::TaskSpec> task_specs(Run& run, const std::string& flag, std::span<const eval::ResultRow> rows) {
  const auto& c = run.config();
  if (!flag.empty() || c.paths.count("tasks")) {
    const fs::path p = pick_path(flag, c, "tasks", "--tasks");
    run.input("tasks", p);
    return eval::load_task_specs(p);
  }
  return eval::infer_task_specs(rows);
}

void score(const Globals& g, const ScoreArgs& a) {
  Run run(g, "score");
  run.start();
  const fs::path out = run.out_dir(a.out);
  if (!a.hyp.empty() || !a.ref.empty()) {
    if (a.hyp.empty() || a.ref.empty()) throw ContractViolation("--hyp and --ref go together");
    run.input("hyp", a.hyp);
    run.input("ref", a.ref);
    const auto hyp = io::read_lines(a.hyp);
    const auto ref = io::read_lines(a.ref);
    if (hyp.size() != ref.size()) {
      throw ContractViolation("--hyp has " + std::to_string(hyp.size()) + " lines, --ref has " +
                              std::to_string(ref.size()));
    }
    std::vector<metrics::CandidateRefs> pairs;
    double chrf_sum = 0.0, bleu_sum = 0.0;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      pairs.push_back({hyp[i], {ref[i]}});
      chrf_sum += metrics::chrf_pp(hyp[i], pairs.back().references).value;
      bleu_sum += metrics::sentence_bleu(hyp[i], pairs.back().references).value;
    }
    const double n = hyp.empty() ? 1.0 : static_cast<double>(hyp.size());
    const Json j{{"sentences", hyp.size()},
                 {"corpus_bleu", metrics::corpus_bleu(pairs).value},
                 {"mean_sentence_bleu", bleu_sum / n},
                 {"mean_sentence_chrf_pp", chrf_sum / n}};
    std::cout << j.dump(2) << "\n";
    run.write(out / "metrics.json", j.dump(2) + "\n");
    run.finish(out, {{"sentences", hyp.size()}});
    return;
  }
  const fs::path results_path = pick_path(a.results, run.config(), "results", "--results");
  run.input("results", results_path);
  const auto rows = eval::load_results(results_path);
  const auto specs = task_specs(run, a.tasks, rows);
  const auto results = eval::group_results(rows);
  std::cout << eval::render_score_table(results, specs);
  run.write(out / "score_rows.jsonl", eval::render_score_rows(results, specs));
  run.write(out / "score_table.txt", eval::render_score_table(results, specs));
  run.finish(out, {{"models", results.size()}, {"tasks", specs.size()}});
}

struct JudgeArgs {
  std::string judgments, responses, focus, out;
};

std::vector<eval::PairwiseJudgment> judgments_from_responses(const fs::path& path) {
  std::vector<eval::PairwiseJudgment> out;
  io::for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    try {
      const auto pos = j.at("position_of_a").get<std::string>();
      if (pos != "first" && pos != "second") throw ParseError(path.string(), line, 0, "bad position_of_a");
      const auto verdict = eval::parse_judge_verdict(j.at("response").get<std::string>());
      out.push_back(eval::to_judgment(verdict, j.at("question_id").get<std::string>(), j.at("model_a").get<std::string>(),
                                      j.at("model_b").get<std::string>(),
                                      pos == "first" ? eval::Position::first : eval::Position::second));
    } catch (const Json::exception& e) {
      throw ParseError(path.string(), line, 0, e.what());
    }
  });
  return out;
}

void judge_aggregate(const Globals& g, const JudgeArgs& a) {
  Run run(g, "judge-aggregate");
  run.start();
  std::vector<eval::PairwiseJudgment> judgments;
  const fs::path out = run.out_dir(a.out);
  if (!a.responses.empty()) {
    run.input("responses", a.responses);
    judgments = judgments_from_responses(a.responses);
    run.write(out / "judgments.jsonl", eval::judgments_to_jsonl(judgments));
  } else {
    const fs::path p = pick_path(a.judgments, run.config(), "judgments", "--judgments");
    run.input("judgments", p);
    judgments = eval::load_judgments(p);
  }
  const auto report = eval::aggregate_pairwise(judgments, a.focus);
  std::cout << report.table();
  run.write(out / "winrate.json", report.json());
  run.write(out / "winrate_rows.jsonl", report.plot_rows_jsonl());
  run.finish(out, {{"judgments", report.judgments}});
}

struct ReportArgs {
  std::string results, tasks, sweep_manifest, judgments, focus, out;
};

void report(const Globals& g, const ReportArgs& a) {
  Run run(g, "report");
  run.start();
  const auto& c = run.config();
  const fs::path out = run.out_dir(a.out);
  std::string text;
  if (!a.results.empty() || c.paths.count("results")) {
    const fs::path p = pick_path(a.results, c, "results", "--results");
    run.input("results", p);
    const auto rows = eval::load_results(p);
    const auto specs = task_specs(run, a.tasks, rows);
    std::map<std::string, double> lambdas;
    if (!a.sweep_manifest.empty()) {
      run.input("sweep_manifest", a.sweep_manifest);
      const Json m = Json::parse(io::read_file(a.sweep_manifest));
      for (const auto& e : m.at("sweep")) {
        const auto file = e.at("file").get<std::string>();
        lambdas[file] = e.at("lambda").get<double>();
        lambdas[fs::path(file).stem().string()] = e.at("lambda").get<double>();
      }
    }
    const bool is_sweep = !lambdas.empty() || std::any_of(rows.begin(), rows.end(), [](const eval::ResultRow& r) {
      return r.lambda.has_value();
    });
    if (is_sweep) {
      const auto points = eval::sweep_points(rows, specs, lambdas);
      text += "Lambda sweep\n" + eval::render_sweep_table(points, specs) + "\n";
      run.write(out / "sweep_curve.jsonl", eval::render_sweep_curve(points));
    } else {
      const auto results = eval::group_results(rows);
      text += "Benchmark scores\n" + eval::render_score_table(results, specs) + "\n";
      run.write(out / "score_rows.jsonl", eval::render_score_rows(results, specs));
    }
  }
  if (!a.judgments.empty() || c.paths.count("judgments")) {
    if (a.focus.empty()) throw ContractViolation("--focus is required with judgments");
    const fs::path p = pick_path(a.judgments, c, "judgments", "--judgments");
    run.input("judgments", p);
    const auto wr = eval::aggregate_pairwise(eval::load_judgments(p), a.focus);
    text += "Pairwise win rates\n" + wr.table() + "\n";
    run.write(out / "winrate_rows.jsonl", wr.plot_rows_jsonl());
  }
  if (text.empty()) throw ContractViolation("report needs --results and/or --judgments");
  std::cout << text;
  run.write(out / "report.txt", text);
  run.finish(out);
}

struct PipelineArgs {
  std::string out;
};

void run_pipeline(const Globals& g, const PipelineArgs& a) {
  Run run(g, "pipeline");
  run.start();
  const auto outputs = pipeline::run_pipeline(run.config(), run.out_dir(a.out), &run.log());
  for (const auto& p : outputs) std::cout << p.string() << "\n";
}

struct PromptArgs {
  std::string tmpl;
  std::vector<std::string> fields;
};

void prompt(const Globals& g, const PromptArgs& a) {
  Run run(g, "prompt");
  run.start();
  std::map<std::string, std::string> fields;
  for (const auto& f : a.fields) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw ContractViolation("--set must be KEY=VALUE");
    fields[f.substr(0, eq)] = f.substr(eq + 1);
  }
  std::cout << eval::render_template(io::read_file(a.tmpl), fields);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toolkit for adapting language models to low-resource languages", "byol"};
  app.set_version_flag("--version", pipeline::kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--concurrency", g.concurrency, "Concurrency limit passed to the modules");
  app.add_option("--cache-dir", g.cache_dir, "Translation cache directory (overrides BYOL_CACHE_DIR)");
  app.add_option("--report-dir", g.report_dir, "Default output directory");
  app.add_flag("--quiet", g.quiet, "Suppress the JSON event log on stderr");

  std::function<int()> action;
  auto bind = [&](CLI::App* sub, auto fn) { sub->callback([&action, fn] { action = fn; }); };

  ClassifyArgs ca;
  auto* s = app.add_subcommand("classify", "Assign resource tiers and adaptation pathways");
  s->add_option("--profiles", ca.profiles, "Language profiles (.jsonl or .tsv)");
  s->add_option("--format", ca.format, "table or jsonl")->check(CLI::IsMember({"table", "jsonl"}));
  s->add_option("--out", ca.out, "Output directory");
  bind(s, [&] { classify(g, ca); return 0; });

  RttArgs ra;
  s = app.add_subcommand("rtt-eval", "Round-trip translation evaluation");
  s->add_option("--benchmark", ra.benchmark, "Benchmark JSONL (domain, id, text)");
  s->add_option("--forward", ra.forward, "Forward backend: config name, mock kind or file:PATH");
  s->add_option("--backward", ra.backward, "Backward backend");
  s->add_option("--target-lang", ra.target_lang, "ISO 639-3 code of the intermediate language");
  s->add_option("--metrics", ra.metrics, "Comma list of bleu, chrf_pp, cosine");
  s->add_option("--batch-size", ra.batch_size, "Sentences per backend request");
  s->add_option("--retries", ra.retries, "Attempts per request");
  s->add_flag("--corpus-bleu", ra.corpus_bleu, "Corpus-level BLEU within each domain");
  s->add_option("--out", ra.out, "Output directory");
  bind(s, [&] { rtt_eval(g, ra); return 0; });

  RankArgs rka;
  s = app.add_subcommand("rank", "Rank backends from RTT score reports");
  s->add_option("--reports", rka.reports, "scores.json files")->required()->check(CLI::ExistingFile);
  s->add_option("--out", rka.out, "Output directory");
  bind(s, [&] { rank(g, rka); return 0; });

  FilterArgs fa;
  s = app.add_subcommand("filter", "Deduplicate and length/ratio-filter a bitext");
  s->add_option("--input", fa.input, "Bitext (.tsv or .jsonl), or text lines with --monolingual");
  s->add_option("--min-tokens", fa.min_tokens);
  s->add_option("--max-tokens", fa.max_tokens);
  s->add_option("--max-ratio", fa.max_ratio, "Maximum symmetric character-length ratio");
  s->add_flag("--no-dedup", fa.no_dedup);
  s->add_flag("--monolingual", fa.monolingual, "Input is one text per line");
  s->add_option("--out", fa.out, "Output directory");
  bind(s, [&] { filter(g, fa); return 0; });

  AugmentArgs aa;
  s = app.add_subcommand("augment", "Seeded noise augmentation of a bitext");
  s->add_option("--input", aa.input, "Bitext (.tsv or .jsonl)");
  s->add_option("--epoch", aa.epoch, "Epoch number; each epoch draws a fresh stream");
  s->add_option("--p-punct", aa.p_punct);
  s->add_option("--p-diacritic", aa.p_diacritic);
  s->add_option("--p-case", aa.p_case);
  s->add_option("--p-copy", aa.p_copy);
  s->add_option("--out", aa.out, "Output directory");
  bind(s, [&] { augment(g, aa); return 0; });

  TranslitArgs ta;
  s = app.add_subcommand("transliterate", "Apply a longest-match transliteration table");
  s->add_option("--table", ta.table, "Two-column TSV table");
  s->add_option("--input", ta.input, "Text lines, or a .jsonl bitext")->required()->check(CLI::ExistingFile);
  s->add_option("--side", ta.side, "For bitext input: source, target or both");
  s->add_option("--out", ta.out, "Output file");
  bind(s, [&] { transliterate(g, ta); return 0; });

  MixArgs ma;
  s = app.add_subcommand("mix", "Mix corpora at fixed proportions");
  s->add_option("--component", ma.components, "NAME=PATH[:WEIGHT], repeatable");
  s->add_option("--unit", ma.unit, "tokens or pairs");
  s->add_option("--total", ma.total, "Mixture size in units");
  s->add_option("--out", ma.out, "Output directory");
  bind(s, [&] { mix(g, ma); return 0; });

  AlignArgs al;
  s = app.add_subcommand("align-check", "Validate JSONL sentence alignments");
  s->add_option("--records", al.records, "Alignment JSONL")->required()->check(CLI::ExistingFile);
  s->add_option("--source-doc", al.source_doc, "Source sentences, one per line")->check(CLI::ExistingFile);
  s->add_option("--target-doc", al.target_doc, "Target sentences, one per line")->check(CLI::ExistingFile);
  s->add_option("--threshold", al.threshold, "Trigram overlap above which a record is rejected");
  s->add_flag("--strict", al.strict, "Exit 1 when any record is rejected");
  s->add_option("--out", al.out, "Output directory");
  bind(s, [&] { return align_check(g, al); });

  MergeArgs mg;
  auto add_merge_inputs = [](CLI::App* sub, MergeArgs& m) {
    sub->add_option("--g-pt", m.g_pt, "Pretrained generalist checkpoint");
    sub->add_option("--g-it", m.g_it, "Instruction-tuned generalist checkpoint");
    sub->add_option("--expert", m.expert, "Language expert checkpoint");
    sub->add_option("--pattern", m.pattern, "Sweep output name pattern containing {lambda}");
  };
  s = app.add_subcommand("merge", "Linear weight-space merge of three checkpoints");
  add_merge_inputs(s, mg);
  auto* alpha = s->add_option("--alpha", mg.alpha);
  auto* beta = s->add_option("--beta", mg.beta);
  auto* lambda = s->add_option("--lambda", mg.lambda, "alpha = 1 - lambda, beta = lambda");
  auto* grid = s->add_option("--sweep", mg.grid, "START:STOP:STEP or comma list; writes one file per lambda");
  lambda->excludes(alpha)->excludes(beta)->excludes(grid);
  grid->excludes(alpha)->excludes(beta);
  s->add_option("--out", mg.out, "Output file (directory with --sweep)");
  bind(s, [&] { merge_cmd(g, mg); return 0; });

  MergeArgs sw;
  s = app.add_subcommand("sweep", "Lambda sweep over the merge line");
  add_merge_inputs(s, sw);
  s->add_option("--sweep,--lambdas", sw.grid, "START:STOP:STEP or comma list")->required();
  s->add_option("--out", sw.out, "Output directory");
  bind(s, [&] { sweep_cmd(g, sw); return 0; });

  AverageArgs av;
  s = app.add_subcommand("average", "Elementwise mean of checkpoints");
  s->add_option("--inputs", av.inputs, "Checkpoint files")->required()->check(CLI::ExistingFile);
  s->add_option("--out", av.out, "Output file");
  bind(s, [&] { average(g, av); return 0; });

  ScoreArgs sc;
  s = app.add_subcommand("score", "Average benchmark scores, or BLEU/chrF++ of hypothesis files");
  s->add_option("--results", sc.results, "Results JSONL (model, task, metric, value)");
  s->add_option("--tasks", sc.tasks, "Task specs JSONL (task, metric, role)");
  s->add_option("--hyp", sc.hyp, "Hypotheses, one per line")->check(CLI::ExistingFile);
  s->add_option("--ref", sc.ref, "References, one per line")->check(CLI::ExistingFile);
  s->add_option("--out", sc.out, "Output directory");
  bind(s, [&] { score(g, sc); return 0; });

  JudgeArgs ja;
  s = app.add_subcommand("judge-aggregate", "Win rates from forced-choice pairwise judgments");
  auto* jfile = s->add_option("--judgments", ja.judgments, "Judgments JSONL");
  auto* rfile = s->add_option("--responses", ja.responses, "Raw judge responses JSONL")->check(CLI::ExistingFile);
  jfile->excludes(rfile);
  s->add_option("--focus", ja.focus, "Model whose win rate is reported")->required();
  s->add_option("--out", ja.out, "Output directory");
  bind(s, [&] { judge_aggregate(g, ja); return 0; });

  ReportArgs rp;
  s = app.add_subcommand("report", "Render score, lambda-sweep and win-rate reports");
  s->add_option("--results", rp.results, "Results JSONL");
  s->add_option("--tasks", rp.tasks, "Task specs JSONL");
  s->add_option("--sweep-manifest", rp.sweep_manifest, "sweep_manifest.json mapping files to lambdas")
      ->check(CLI::ExistingFile);
  s->add_option("--judgments", rp.judgments, "Judgments JSONL");
  s->add_option("--focus", rp.focus, "Focus model for win rates");
  s->add_option("--out", rp.out, "Output directory");
  bind(s, [&] { report(g, rp); return 0; });

  PipelineArgs pa;
  s = app.add_subcommand("pipeline", "classify, filter, mix, rtt-eval, merge and score from the config");
  s->add_option("--out", pa.out, "Output directory");
  bind(s, [&] { run_pipeline(g, pa); return 0; });

  PromptArgs pr;
  s = app.add_subcommand("prompt", "Fill a prompt template's {PLACEHOLDERS}");
  s->add_option("--template", pr.tmpl, "Template file")->required()->check(CLI::ExistingFile);
  s->add_option("--set", pr.fields, "KEY=VALUE, repeatable");
  bind(s, [&] { prompt(g, pr); return 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "byol: " << e.what() << "\nRun with --help for usage.\n";
    return static_cast<int>(ExitCode::usage);
  }

  try {
    return action ? action() : static_cast<int>(ExitCode::usage);
  } catch (const Error& e) {
    std::cerr << "byol: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "byol: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io_failure);
  } catch (const std::exception& e) {
    std::cerr << "byol: " << e.what() << "\n";
    return static_cast<int>(ExitCode::contract_violation);
  }
}
