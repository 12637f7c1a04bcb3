#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "byol/io.hpp"
#include "byol/pipeline.hpp"
#include "byol/tensor.hpp"
#include "support.hpp"

using namespace byol;
using namespace byol::pipeline;

namespace {

int run_cli(const std::string& args, const std::string& stdout_file = "/dev/null") {
  const std::string cmd = std::string("\"") + BYOL_CLI + "\" --quiet " + args + " >" + stdout_file + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string fx(const std::string& name) { return "\"" + support::fixture(name).string() + "\""; }

}  // namespace

TEST_CASE("config parsing resolves paths and rejects unknown keys") {
  const auto c = load_config(support::fixture("pipeline_config.json"));
  CHECK(c.seed == 20251017);
  CHECK(c.paths.at("bitext") == support::fixture("pipeline_bitext.tsv"));
  CHECK(c.mix.components.size() == 3);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(PipelineConfig::from_json(io::Json::parse("{\"sed\": 1}")), ContractViolation);
  CHECK_THROWS_AS(PipelineConfig::from_json(io::Json::parse("{\"filter\": {\"min\": 1}}")), ContractViolation);
}

TEST_CASE("fingerprint ignores operational settings") {
  auto a = load_config(support::fixture("pipeline_config.json"));
  auto b = a;
  b.concurrency_limit = 16;
  b.report_dir = "/elsewhere";
  b.cache_dir = "/cache";
  CHECK(a.fingerprint() == b.fingerprint());
  b.seed = 1;
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("environment overrides the cache dir") {
  auto c = load_config(support::fixture("pipeline_config.json"));
  ::setenv("BYOL_CACHE_DIR", "/tmp/byol-env-cache", 1);
  apply_environment(c);
  ::unsetenv("BYOL_CACHE_DIR");
  CHECK(c.cache_dir == std::filesystem::path("/tmp/byol-env-cache"));
}

TEST_CASE("backend resolution") {
  auto c = load_config(support::fixture("pipeline_config.json"));
  CHECK(resolve_backend(c, "word_reverse")->name() == "word_reverse");
  CHECK(resolve_backend(c, "file:" + support::fixture("mapping.tsv").string())->translate(
            std::vector<std::string>{"hello"}, "eng", "fra")[0] == "bonjour");
  backends::BackendConfig remote;
  remote.kind = backends::BackendKind::http;
  remote.name = "remote";
  remote.endpoint = "http://127.0.0.1:1/t";
  c.backends["remote"] = remote;
  CHECK_THROWS_AS(resolve_backend(c, "remote"), ContractViolation);
  support::TempDir dir("resolve");
  c.cache_dir = dir.path();
  CHECK(resolve_backend(c, "remote")->deterministic());
  CHECK_THROWS_AS(resolve_backend(c, "unknown-kind"), ContractViolation);
}

TEST_CASE("event log lines are json") {
  std::ostringstream out;
  EventLog log(&out);
  log.emit("filter", 1.5, {{"kept", 3}});
  const auto j = io::Json::parse(out.str());
  CHECK(j.at("stage") == "filter");
  CHECK(j.at("counts").at("kept") == 3);
}

TEST_CASE("pipeline writes manifests and is reproducible") {
  const auto c = load_config(support::fixture("pipeline_config.json"));
  support::TempDir a("pipe-a"), b("pipe-b");
  const auto files = run_pipeline(c, a.path());
  run_pipeline(c, b.path());
  CHECK(files.size() >= 10);
  for (const auto& f : files) {
    const auto rel = std::filesystem::relative(f, a.path());
    CAPTURE(rel.string());
    CHECK(io::read_file(f) == io::read_file(b.path() / rel));
  }
  const auto manifest = io::Json::parse(io::read_file(a / "manifest.pipeline.json"));
  CHECK(manifest.at("seed") == 20251017);
  CHECK(manifest.at("config_fingerprint") == c.fingerprint());
  CHECK(manifest.dump().find("timestamp") == std::string::npos);
}

TEST_CASE("cli exit codes and outputs") {
  support::TempDir dir("cli");
  const auto out = dir.path().string();
  CHECK(run_cli("no-such-subcommand") == 64);
  CHECK(run_cli("classify --bogus-flag") == 64);
  CHECK(run_cli("classify --profiles " + fx("langs.tsv") + " --out \"" + out + "\"") == 0);
  CHECK(std::filesystem::exists(dir / "manifest.classify.json"));
  CHECK(run_cli("classify --profiles \"" + out + "/missing.tsv\" --out \"" + out + "\"") == 2);
  CHECK(run_cli("merge --g-pt " + fx("scalar_g_pt.byt") + " --g-it " + fx("scalar_g_it.byt") + " --expert " +
                fx("scalar_expert.byt") + " --lambda 1.5 --out \"" + out + "/m.byt\"") == 1);
  CHECK(run_cli("merge --g-pt " + fx("scalar_g_pt.byt") + " --g-it " + fx("scalar_g_it.byt") + " --expert " +
                fx("scalar_expert.byt") + " --lambda 0.6 --out \"" + out + "/m.byt\"") == 0);
  CHECK(tensor::load_checkpoint(dir / "m.byt").tensors.at("w").data[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(run_cli("align-check --strict --records " + fx("align_swapped.jsonl") + " --source-doc " +
                fx("align_source_doc.txt") + " --target-doc " + fx("align_target_doc.txt") + " --out \"" + out +
                "\"") == 1);
  CHECK(run_cli("transliterate --table " + fx("syllabics.tsv") + " --input " + fx("syllabics.tsv") + " --out \"" +
                out + "/t.txt\"") == 0);
}
