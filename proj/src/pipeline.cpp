#include "byol/pipeline.hpp"

#include <cstdlib>
#include <iostream>

#include "byol/digest.hpp"
#include "byol/error.hpp"
#include "byol/eval.hpp"
#include "byol/merge.hpp"
#include "byol/tensor.hpp"
#include "byol/text.hpp"

namespace byol::pipeline {

namespace {

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ContractViolation(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ContractViolation("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

backends::BackendConfig backend_from_json(const std::string& name, const Json& j, const fs::path& base) {
  require_keys(j, {"kind", "endpoint", "auth_env_var", "mapping", "timeout_ms", "max_in_flight", "batch_size"},
               "backend '" + name + "'");
  backends::BackendConfig c;
  c.kind = backends::parse_backend_kind(j.at("kind").get<std::string>());
  c.name = name;
  if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
  if (j.contains("auth_env_var")) c.auth_env_var = j.at("auth_env_var").get<std::string>();
  if (j.contains("mapping")) c.mapping = resolve(base, j.at("mapping").get<std::string>());
  if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.batch_size = j.value("batch_size", c.batch_size);
  return c;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base) {
  PipelineConfig c;
  try {
    require_keys(j, {"seed", "concurrency_limit", "cache_dir", "report_dir", "tiers", "filter", "augment", "mix",
                     "rtt", "backends", "paths", "lambda"},
                 "config");
    c.seed = j.value("seed", c.seed);
    c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
    if (j.contains("cache_dir")) c.cache_dir = resolve(base, j.at("cache_dir").get<std::string>());
    if (j.contains("report_dir")) c.report_dir = resolve(base, j.at("report_dir").get<std::string>());
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("tiers")) {
      const auto& t = j.at("tiers");
      require_keys(t, {"extreme_low_max", "low_max", "mid_max"}, "tiers");
      c.tiers.extreme_low_max = t.value("extreme_low_max", c.tiers.extreme_low_max);
      c.tiers.low_max = t.value("low_max", c.tiers.low_max);
      c.tiers.mid_max = t.value("mid_max", c.tiers.mid_max);
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      require_keys(f, {"min_tokens", "max_tokens", "max_char_ratio", "dedup"}, "filter");
      c.filter.min_tokens = f.value("min_tokens", c.filter.min_tokens);
      c.filter.max_tokens = f.value("max_tokens", c.filter.max_tokens);
      c.filter.max_char_ratio = f.value("max_char_ratio", c.filter.max_char_ratio);
      c.filter.dedup = f.value("dedup", c.filter.dedup);
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      require_keys(a, {"p_punct_removal", "p_diacritic_strip", "p_case_variation", "p_copy"}, "augment");
      c.augment.p_punct_removal = a.value("p_punct_removal", c.augment.p_punct_removal);
      c.augment.p_diacritic_strip = a.value("p_diacritic_strip", c.augment.p_diacritic_strip);
      c.augment.p_case_variation = a.value("p_case_variation", c.augment.p_case_variation);
      c.augment.p_copy = a.value("p_copy", c.augment.p_copy);
    }
    if (j.contains("mix")) {
      const auto& m = j.at("mix");
      require_keys(m, {"unit", "total_units", "components"}, "mix");
      if (m.contains("unit")) c.mix.unit = refinery::parse_mix_unit(m.at("unit").get<std::string>());
      if (m.contains("total_units") && !m.at("total_units").is_null()) {
        c.mix.total_units = m.at("total_units").get<std::uint64_t>();
      }
      for (const auto& comp : m.value("components", Json::array())) {
        require_keys(comp, {"name", "path", "weight"}, "mix component");
        c.mix.components.push_back({comp.at("name").get<std::string>(),
                                    resolve(base, comp.at("path").get<std::string>()), comp.value("weight", 1.0)});
      }
    }
    if (j.contains("rtt")) {
      const auto& r = j.at("rtt");
      require_keys(r, {"forward", "backward", "target_language", "metrics", "batch_size", "retry_attempts",
                       "retry_base_delay_ms", "corpus_level_bleu"},
                   "rtt");
      c.rtt.forward = r.value("forward", c.rtt.forward);
      c.rtt.backward = r.value("backward", c.rtt.backward);
      c.rtt.target_language = r.value("target_language", c.rtt.target_language);
      if (r.contains("metrics")) {
        c.rtt.metrics.clear();
        for (const auto& m : r.at("metrics")) c.rtt.metrics.insert(rtt::parse_metric(m.get<std::string>()));
      }
      c.rtt.batch_size = r.value("batch_size", c.rtt.batch_size);
      c.rtt.retry.attempts = r.value("retry_attempts", c.rtt.retry.attempts);
      c.rtt.retry.base_delay =
          std::chrono::milliseconds(r.value("retry_base_delay_ms", static_cast<std::int64_t>(c.rtt.retry.base_delay.count())));
      c.rtt.corpus_level_bleu = r.value("corpus_level_bleu", c.rtt.corpus_level_bleu);
    }
    if (j.contains("backends")) {
      for (const auto& [name, b] : j.at("backends").items()) c.backends[name] = backend_from_json(name, b, base);
    }
    if (j.contains("paths")) {
      for (const auto& [name, p] : j.at("paths").items()) c.paths[name] = resolve(base, p.get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }
  return c;
}

Json PipelineConfig::to_json() const {
  Json backends_json = Json::object();
  for (const auto& [name, b] : backends) {
    Json bj{{"kind", backends::to_string(b.kind)},
            {"timeout_ms", b.timeout.count()},
            {"max_in_flight", b.max_in_flight},
            {"batch_size", b.batch_size}};
    if (b.endpoint) bj["endpoint"] = *b.endpoint;
    if (b.auth_env_var) bj["auth_env_var"] = *b.auth_env_var;
    if (b.mapping) bj["mapping"] = b.mapping->string();
    backends_json[name] = bj;
  }
  Json mix_components = Json::array();
  for (const auto& m : mix.components) {
    mix_components.push_back({{"name", m.name}, {"path", m.path.string()}, {"weight", m.weight}});
  }
  Json metric_names = Json::array();
  for (auto m : rtt.metrics) metric_names.push_back(rtt::to_string(m));
  Json path_json = Json::object();
  for (const auto& [name, p] : paths) path_json[name] = p.string();
  Json j{
      {"seed", seed},
      {"concurrency_limit", concurrency_limit},
      {"report_dir", report_dir.string()},
      {"lambda", lambda},
      {"tiers", {{"extreme_low_max", tiers.extreme_low_max}, {"low_max", tiers.low_max}, {"mid_max", tiers.mid_max}}},
      {"filter",
       {{"min_tokens", filter.min_tokens},
        {"max_tokens", filter.max_tokens},
        {"max_char_ratio", filter.max_char_ratio},
        {"dedup", filter.dedup}}},
      {"augment",
       {{"p_punct_removal", augment.p_punct_removal},
        {"p_diacritic_strip", augment.p_diacritic_strip},
        {"p_case_variation", augment.p_case_variation},
        {"p_copy", augment.p_copy}}},
      {"mix",
       {{"unit", refinery::to_string(mix.unit)},
        {"total_units", mix.total_units ? Json(*mix.total_units) : Json()},
        {"components", mix_components}}},
      {"rtt",
       {{"forward", rtt.forward},
        {"backward", rtt.backward},
        {"target_language", rtt.target_language},
        {"metrics", metric_names},
        {"batch_size", rtt.batch_size},
        {"retry_attempts", rtt.retry.attempts},
        {"retry_base_delay_ms", rtt.retry.base_delay.count()},
        {"corpus_level_bleu", rtt.corpus_level_bleu}}},
      {"backends", backends_json},
      {"paths", path_json},
  };
  if (cache_dir) j["cache_dir"] = cache_dir->string();
  return j;
}

std::string PipelineConfig::fingerprint() const {
  Json j = to_json();
  // Where outputs land and how many workers run does not change results.
  j.erase("report_dir");
  j.erase("concurrency_limit");
  j.erase("cache_dir");
  return sha256_hex(j.dump());
}

void PipelineConfig::validate() const {
  if (concurrency_limit < 1) throw ContractViolation("concurrency_limit must be positive");
  tiers.validate();
  filter.validate();
  augment.validate();
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("lambda must lie in [0, 1]");
  for (const auto& [name, b] : backends) {
    b.validate();
    if (b.mapping && !fs::exists(*b.mapping)) {
      throw IoError("backend '" + name + "': mapping file " + b.mapping->string() + " not found");
    }
  }
  for (const auto& [name, p] : paths) {
    if (!fs::exists(p)) throw IoError("path '" + name + "' (" + p.string() + ") not found");
  }
  for (const auto& m : mix.components) {
    if (!(m.weight > 0.0)) throw ContractViolation("mix component '" + m.name + "' needs a positive weight");
    if (!fs::exists(m.path)) throw IoError("mix component '" + m.name + "' (" + m.path.string() + ") not found");
  }
}

PipelineConfig load_config(const fs::path& path) {
  const std::string content = io::read_file(path);
  Json j;
  try {
    j = Json::parse(content);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 0, e.byte, "config is not valid JSON");
  }
  return PipelineConfig::from_json(j, path.parent_path());
}

void apply_environment(PipelineConfig& config) {
  if (const char* dir = std::getenv("BYOL_CACHE_DIR"); dir && *dir) config.cache_dir = fs::path(dir);
}

std::shared_ptr<backends::TranslationBackend> resolve_backend(const PipelineConfig& config, const std::string& spec) {
  backends::BackendConfig bc;
  if (auto it = config.backends.find(spec); it != config.backends.end()) {
    bc = it->second;
  } else if (spec.rfind("file:", 0) == 0) {
    bc.kind = backends::BackendKind::file;
    bc.mapping = fs::path(spec.substr(5));
    bc.name = "file";
  } else {
    bc.kind = backends::parse_backend_kind(spec);
    if (bc.kind == backends::BackendKind::http) {
      throw ContractViolation("http backends must be defined in the config file");
    }
  }
  auto backend = backends::make_backend(bc);
  if (config.cache_dir) {
    return std::make_shared<backends::CachedBackend>(backend,
                                                     std::make_shared<backends::TranslationCache>(*config.cache_dir));
  }
  if (!backend->deterministic()) {
    throw ContractViolation("backend '" + spec + "' is non-deterministic; set a cache directory");
  }
  return backend;
}

void EventLog::emit(const std::string& stage, double duration_ms, const Json& counts, const std::string& event) {
  if (!out_) return;
  const Json line{{"event", event}, {"stage", stage}, {"duration_ms", duration_ms}, {"counts", counts}};
  std::lock_guard lock(mutex_);
  *out_ << line.dump() << '\n' << std::flush;
}

double StageTimer::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
}

Json run_manifest(const std::string& subcommand, const PipelineConfig& config,
                  const std::map<std::string, fs::path>& inputs, const std::vector<fs::path>& outputs) {
  Json in = Json::object();
  for (const auto& [name, p] : inputs) {
    if (fs::is_regular_file(p)) {
      in[name] = {{"file", p.filename().string()}, {"sha256", sha256_hex(io::read_file(p))}};
    }
  }
  Json out = Json::array();
  for (const auto& p : outputs) {
    if (fs::is_regular_file(p)) {
      out.push_back({{"file", p.filename().string()}, {"sha256", sha256_hex(io::read_file(p))}});
    }
  }
  return {{"subcommand", subcommand},
          {"version", kVersion},
          {"seed", config.seed},
          {"config_fingerprint", config.fingerprint()},
          {"inputs", in},
          {"outputs", out}};
}

fs::path write_manifest(const fs::path& dir, const std::string& subcommand, const Json& manifest) {
  fs::create_directories(dir);
  const fs::path path = dir / ("manifest." + subcommand + ".json");
  io::write_file(path, manifest.dump(2) + "\n");
  return path;
}

refinery::MixComponent load_mix_component(const MixSource& source) {
  refinery::MixComponent c;
  c.name = source.name;
  c.weight = source.weight;
  for (auto& line : io::read_lines(source.path)) {
    if (text::count_words(line) == 0) continue;
    c.records.push_back(std::move(line));
  }
  return c;
}

std::size_t mix_record_tokens(std::string_view record) {
  if (!record.empty() && record.front() == '{') {
    const Json j = Json::parse(record, nullptr, false);
    if (j.is_object()) {
      std::size_t n = 0;
      for (const char* key : {"text", "source", "target"}) {
        if (j.contains(key) && j.at(key).is_string()) n += refinery::count_tokens(j.at(key).get<std::string>());
      }
      return n;
    }
  }
  return refinery::count_tokens(record);
}

std::vector<Json> report_result_rows(const rtt::RttReport& report) {
  std::vector<Json> rows;
  for (const auto& [domain, d] : report.domains) {
    if (!d.valid) continue;
    for (const auto& [metric, value] : d.scores) {
      if (metric == rtt::Metric::cosine) continue;
      rows.push_back({{"model", report.backend},
                      {"task", "rtt/" + domain},
                      {"metric", rtt::to_string(metric)},
                      {"value", value}});
    }
  }
  return rows;
}

std::vector<fs::path> run_pipeline(const PipelineConfig& config, const fs::path& out_dir, EventLog* log) {
  config.validate();
  for (const char* key : {"profiles", "bitext", "benchmark"}) {
    if (!config.paths.count(key)) throw ContractViolation(std::string("pipeline needs paths.") + key);
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> outputs;
  auto emit = [&](const fs::path& p, std::string_view content) {
    io::write_file(p, content);
    outputs.push_back(p);
  };
  auto logged = [&](const std::string& stage, const StageTimer& t, const Json& counts) {
    if (log) log->emit(stage, t.elapsed_ms(), counts);
  };

  {
    StageTimer t;
    const auto profiles = atlas::load_profiles(config.paths.at("profiles"));
    const auto report = atlas::atlas_report(profiles, config.tiers);
    emit(out_dir / "atlas.jsonl", report.rows_jsonl());
    logged("classify", t, {{"languages", report.rows.size()}});
  }

  {
    StageTimer t;
    const auto pairs = refinery::load_bitext(config.paths.at("bitext"));
    const auto result = refinery::filter_pairs(pairs, config.filter);
    emit(out_dir / "filtered.jsonl", refinery::bitext_to_jsonl(result.kept));
    emit(out_dir / "rejections.jsonl", refinery::rejections_to_jsonl(result.rejections));
    logged("filter", t, {{"input", pairs.size()}, {"kept", result.kept.size()}, {"rejected", result.rejections.size()}});
  }

  if (!config.mix.components.empty()) {
    StageTimer t;
    refinery::MixtureSpec spec;
    spec.unit = config.mix.unit;
    spec.total_units = config.mix.total_units;
    spec.token_counter = mix_record_tokens;
    for (const auto& m : config.mix.components) spec.components.push_back(load_mix_component(m));
    const auto mixed = refinery::mix_corpora(spec, stage_seed(config.seed, "mix"));
    std::vector<Json> rows;
    for (const auto& r : mixed.records) {
      rows.push_back({{"component", spec.components[r.component].name}, {"record", r.text}});
    }
    emit(out_dir / "mixed.jsonl", io::to_jsonl(rows));
    emit(out_dir / "mix_manifest.json", mixed.manifest.json());
    logged("mix", t, {{"records", mixed.records.size()}, {"units", mixed.manifest.total_units}});
  }

  rtt::RttReport rtt_report;
  {
    StageTimer t;
    const auto bench = rtt::load_benchmark(config.paths.at("benchmark"));
    auto forward = resolve_backend(config, config.rtt.forward);
    auto backward = resolve_backend(config, config.rtt.backward);
    rtt::RttOptions o;
    o.metrics = config.rtt.metrics;
    o.target_language = config.rtt.target_language;
    o.concurrency_limit = config.concurrency_limit;
    o.batch_size = config.rtt.batch_size;
    o.retry = config.rtt.retry;
    o.corpus_level_bleu = config.rtt.corpus_level_bleu;
    rtt_report = rtt::run_round_trip(bench, *forward, *backward, o);
    emit(out_dir / "rtt_scores.json", rtt_report.scores_json());
    emit(out_dir / "rtt_transcript.jsonl", rtt_report.transcript_jsonl());
    logged("rtt-eval", t, {{"sentences", bench.sentence_count()}, {"failed", rtt_report.failed_sentences}});
  }

  if (config.paths.count("g_pt") && config.paths.count("g_it") && config.paths.count("expert")) {
    StageTimer t;
    const auto g_pt = tensor::load_checkpoint(config.paths.at("g_pt"));
    const auto g_it = tensor::load_checkpoint(config.paths.at("g_it"));
    const auto expert = tensor::load_checkpoint(config.paths.at("expert"));
    const auto merged = merge::lambda_merge(g_pt, g_it, expert, config.lambda);
    const fs::path out = out_dir / "merged.byt";
    tensor::save_checkpoint(merged, out);
    outputs.push_back(out);
    logged("merge", t, {{"tensors", merged.tensors.size()}});
  }

  {
    StageTimer t;
    std::vector<eval::ResultRow> rows;
    if (config.paths.count("results")) rows = eval::load_results(config.paths.at("results"));
    const auto extra = eval::parse_results(io::to_jsonl(report_result_rows(rtt_report)), "rtt report");
    rows.insert(rows.end(), extra.begin(), extra.end());
    const auto specs =
        config.paths.count("tasks") ? eval::load_task_specs(config.paths.at("tasks")) : eval::infer_task_specs(rows);
    const auto results = eval::group_results(rows);
    emit(out_dir / "score_rows.jsonl", eval::render_score_rows(results, specs));
    emit(out_dir / "score_table.txt", eval::render_score_table(results, specs));
    logged("score", t, {{"models", results.size()}, {"tasks", specs.size()}});
  }

  std::map<std::string, fs::path> inputs = config.paths;
  for (const auto& m : config.mix.components) inputs["mix:" + m.name] = m.path;
  outputs.push_back(write_manifest(out_dir, "pipeline", run_manifest("pipeline", config, inputs, outputs)));
  return outputs;
}

}  // namespace byol::pipeline
