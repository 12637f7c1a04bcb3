#include "byol/atlas.hpp"

#include <algorithm>
#include <charconv>

#include "byol/error.hpp"
#include "byol/text.hpp"

namespace byol::atlas {

std::string_view to_string(ResourceTier tier) {
  switch (tier) {
    case ResourceTier::ExtremeLow: return "extreme-low";
    case ResourceTier::Low: return "low";
    case ResourceTier::Mid: return "mid";
    case ResourceTier::High: return "high";
  }
  return "?";
}

std::string_view to_string(AdaptationPathway pathway) {
  switch (pathway) {
    case AdaptationPathway::TranslateTest: return "translate-test";
    case AdaptationPathway::ContinualPretrainAndMerge: return "cpt-and-merge";
    case AdaptationPathway::DirectFinetune: return "direct-finetune";
    case AdaptationPathway::NativelySupported: return "natively-supported";
  }
  return "?";
}

void TierThresholds::validate() const {
  if (!(extreme_low_max < low_max && low_max < mid_max)) {
    throw ContractViolation("tier thresholds must be strictly increasing");
  }
}

bool is_iso639_3(std::string_view code) {
  return code.size() == 3 &&
         std::all_of(code.begin(), code.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

void require_iso639_3(std::string_view code) {
  if (!is_iso639_3(code)) {
    throw ContractViolation("language code '" + std::string(code) +
                            "' is not three lower-case ASCII letters");
  }
}

ResourceTier classify_tier(std::uint64_t word_count, const TierThresholds& t) {
  t.validate();
  if (word_count <= t.extreme_low_max) return ResourceTier::ExtremeLow;
  if (word_count <= t.low_max) return ResourceTier::Low;
  if (word_count <= t.mid_max) return ResourceTier::Mid;
  return ResourceTier::High;
}

AdaptationPathway route_pathway(ResourceTier tier) {
  switch (tier) {
    case ResourceTier::ExtremeLow: return AdaptationPathway::TranslateTest;
    case ResourceTier::Low: return AdaptationPathway::ContinualPretrainAndMerge;
    case ResourceTier::Mid: return AdaptationPathway::DirectFinetune;
    case ResourceTier::High: return AdaptationPathway::NativelySupported;
  }
  throw ContractViolation("unknown tier");
}

namespace {

std::uint64_t count_document(const std::string& doc, std::size_t index) {
  text::require_utf8(doc, "document " + std::to_string(index));
  return text::count_words(text::nfc(doc));
}

}  // namespace

std::uint64_t count_words_serial(std::span<const std::string> documents) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < documents.size(); ++i) total += count_document(documents[i], i);
  return total;
}

std::uint64_t count_words_parallel(std::span<const std::string> documents) {
  const auto n = static_cast<std::int64_t>(documents.size());
  std::uint64_t total = 0;
  // The first failing document (lowest index) is reported so the error does not
  // depend on scheduling.
  std::int64_t bad_index = n;
#pragma omp parallel for reduction(+ : total) reduction(min : bad_index) schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& doc = documents[static_cast<std::size_t>(i)];
    if (text::find_invalid_utf8(doc)) {
      bad_index = std::min(bad_index, i);
      continue;
    }
    total += text::count_words(text::nfc(doc));
  }
  if (bad_index < n) count_document(documents[static_cast<std::size_t>(bad_index)],
                                    static_cast<std::size_t>(bad_index));
  return total;
}

LanguageProfile build_profile(std::string_view code, std::span<const std::string> documents,
                              std::string_view name) {
  require_iso639_3(code);
  LanguageProfile p;
  p.code = std::string(code);
  p.name = name.empty() ? p.code : std::string(name);
  p.word_count = count_words_parallel(documents);
  return p;
}

AtlasReport atlas_report(std::span<const LanguageProfile> profiles,
                         const TierThresholds& thresholds) {
  if (profiles.empty()) throw ContractViolation("atlas_report: empty profile list");
  thresholds.validate();
  AtlasReport report;
  report.thresholds = thresholds;
  for (const auto& p : profiles) {
    require_iso639_3(p.code);
    const ResourceTier tier = classify_tier(p.word_count, thresholds);
    report.rows.push_back({p.code, p.name, p.word_count, p.speaker_population, tier,
                           route_pathway(tier)});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const AtlasRow& a, const AtlasRow& b) {
    if (a.word_count != b.word_count) return a.word_count > b.word_count;
    return a.code < b.code;
  });
  return report;
}

std::string AtlasReport::table() const {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.code, r.name, std::to_string(r.word_count),
                     r.speaker_population ? std::to_string(*r.speaker_population) : "-",
                     std::string(to_string(r.tier)), std::string(to_string(r.pathway))});
  }
  std::string out = io::render_table(
      {"code", "name", "word_count", "speakers", "tier", "pathway"}, cells);
  out += "thresholds: extreme-low <= " + std::to_string(thresholds.extreme_low_max) +
         " < low <= " + std::to_string(thresholds.low_max) +
         " < mid <= " + std::to_string(thresholds.mid_max) + " < high\n";
  return out;
}

std::string AtlasReport::rows_jsonl() const {
  std::vector<io::Json> out;
  out.push_back({{"record", "thresholds"},
                 {"extreme_low_max", thresholds.extreme_low_max},
                 {"low_max", thresholds.low_max},
                 {"mid_max", thresholds.mid_max}});
  for (const auto& r : rows) {
    io::Json row = {{"record", "language"},
                    {"code", r.code},
                    {"name", r.name},
                    {"word_count", r.word_count},
                    {"speaker_population", nullptr},
                    {"tier", to_string(r.tier)},
                    {"pathway", to_string(r.pathway)}};
    if (r.speaker_population) row["speaker_population"] = *r.speaker_population;
    out.push_back(std::move(row));
  }
  return io::to_jsonl(out);
}

namespace {

std::uint64_t parse_count(std::string_view s, const std::string& where) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ContractViolation(where + ": '" + std::string(s) + "' is not a nonnegative integer");
  }
  return v;
}

}  // namespace

std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path) {
  std::vector<LanguageProfile> out;
  if (path.extension() == ".tsv") {
    const auto lines = io::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty() || lines[i][0] == '#') continue;
      const std::string where = path.string() + ":" + std::to_string(i + 1);
      const auto f = io::split_tab(lines[i]);
      if (f.size() < 3) throw ParseError(path.string(), i + 1, 0, "expected code, name, word_count");
      if (f[0] == "code") continue;  // header row
      LanguageProfile p;
      p.code = f[0];
      require_iso639_3(p.code);
      p.name = f[1];
      p.word_count = parse_count(f[2], where);
      if (f.size() > 3 && !f[3].empty() && f[3] != "-") p.speaker_population = parse_count(f[3], where);
      out.push_back(std::move(p));
    }
    return out;
  }
  io::for_each_jsonl(path, [&](const io::Json& j, std::size_t line) {
    try {
      LanguageProfile p;
      p.code = j.at("code").get<std::string>();
      require_iso639_3(p.code);
      p.name = j.value("name", p.code);
      const auto& wc = j.at("word_count");
      if (!wc.is_number_unsigned() && !(wc.is_number_integer() && wc.get<std::int64_t>() >= 0)) {
        throw ContractViolation("word_count must be a nonnegative integer");
      }
      p.word_count = wc.get<std::uint64_t>();
      if (j.contains("speaker_population") && !j["speaker_population"].is_null()) {
        p.speaker_population = j["speaker_population"].get<std::uint64_t>();
      }
      if (j.contains("script") && j["script"].is_string()) p.script = j["script"].get<std::string>();
      out.push_back(std::move(p));
    } catch (const io::Json::exception& e) {
      throw ParseError(path.string(), line, 0, e.what());
    }
  });
  return out;
}

}  // namespace byol::atlas
