#include "byol/refinery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "byol/digest.hpp"
#include "byol/error.hpp"
#include "byol/text.hpp"

namespace byol::refinery {

using io::Json;

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::human: return "human";
    case Origin::synthetic_backtranslated: return "synthetic_backtranslated";
    case Origin::synthetic_mt: return "synthetic_mt";
  }
  return "?";
}

Origin parse_origin(std::string_view s) {
  if (s == "human") return Origin::human;
  if (s == "synthetic_backtranslated") return Origin::synthetic_backtranslated;
  if (s == "synthetic_mt") return Origin::synthetic_mt;
  throw ContractViolation("unknown origin '" + std::string(s) + "'");
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::duplicate: return "duplicate";
    case RejectReason::length: return "length";
    case RejectReason::ratio: return "ratio";
  }
  return "?";
}

void FilterConfig::validate() const {
  if (!(min_tokens > 0 && min_tokens <= max_tokens)) {
    throw ContractViolation("filter: require 0 < min_tokens <= max_tokens");
  }
  // The symmetric ratio is never below 1.
  if (!(max_char_ratio >= 1.0)) throw ContractViolation("filter: max_char_ratio must be at least 1");
}

std::size_t count_tokens(std::string_view s) { return text::count_words(s); }

std::string dedup_normal_form(std::string_view s) { return text::collapse_ws(text::nfc(s)); }

namespace {

struct Verdict {
  std::string key;
  bool length_bad = false;
  bool ratio_bad = false;
  std::string detail;
};

Verdict judge_pair(const SentencePair& p, const FilterConfig& c) {
  Verdict v;
  const std::string src = dedup_normal_form(p.source);
  const std::string tgt = dedup_normal_form(p.target);
  const std::size_t st = count_tokens(src), tt = count_tokens(tgt);
  auto out_of_bounds = [&](std::size_t n) { return n < c.min_tokens || n > c.max_tokens; };
  if (out_of_bounds(st) || out_of_bounds(tt)) {
    v.length_bad = true;
    v.detail = "source_tokens=" + std::to_string(st) + " target_tokens=" + std::to_string(tt);
  } else {
    const auto sc = static_cast<double>(text::codepoint_length(src));
    const auto tc = static_cast<double>(text::codepoint_length(tgt));
    const double ratio = std::max(sc, tc) / std::min(sc, tc);
    if (ratio > c.max_char_ratio) {
      v.ratio_bad = true;
      v.detail = "source_chars=" + io::shortest(sc) + " target_chars=" + io::shortest(tc) +
                 " ratio=" + io::shortest(ratio);
    }
  }
  // Joint key over both sides; NUL separates them.
  v.key = src;
  v.key.push_back('\0');
  v.key += tgt;
  return v;
}

FilterResult assemble(std::span<const SentencePair> pairs, std::vector<Verdict>& verdicts,
                      const FilterConfig& c) {
  FilterResult r;
  std::unordered_map<std::string, std::size_t> kept_keys;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Verdict& v = verdicts[i];
    if (c.dedup) {
      if (auto it = kept_keys.find(v.key); it != kept_keys.end()) {
        r.rejections.push_back({i, RejectReason::duplicate, "duplicate of record " + std::to_string(it->second)});
        continue;
      }
    }
    if (v.length_bad) {
      r.rejections.push_back({i, RejectReason::length, std::move(v.detail)});
    } else if (v.ratio_bad) {
      r.rejections.push_back({i, RejectReason::ratio, std::move(v.detail)});
    } else {
      if (c.dedup) kept_keys.emplace(std::move(v.key), i);
      r.kept.push_back(pairs[i]);
      r.kept_index.push_back(i);
    }
  }
  return r;
}

}  // namespace

FilterResult filter_pairs_serial(std::span<const SentencePair> pairs, const FilterConfig& c) {
  c.validate();
  std::vector<Verdict> verdicts;
  verdicts.reserve(pairs.size());
  for (const auto& p : pairs) verdicts.push_back(judge_pair(p, c));
  return assemble(pairs, verdicts, c);
}

FilterResult filter_pairs(std::span<const SentencePair> pairs, const FilterConfig& c) {
  c.validate();
  std::vector<Verdict> verdicts(pairs.size());
  const auto n = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    verdicts[static_cast<std::size_t>(i)] = judge_pair(pairs[static_cast<std::size_t>(i)], c);
  }
  return assemble(pairs, verdicts, c);
}

MonolingualResult clean_monolingual(std::span<const std::string> lines, const FilterConfig& c) {
  c.validate();
  MonolingualResult r;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string key = dedup_normal_form(lines[i]);
    if (c.dedup) {
      if (auto it = seen.find(key); it != seen.end()) {
        r.rejections.push_back({i, RejectReason::duplicate, "duplicate of record " + std::to_string(it->second)});
        continue;
      }
    }
    const std::size_t n = count_tokens(key);
    if (n < c.min_tokens || n > c.max_tokens) {
      r.rejections.push_back({i, RejectReason::length, "tokens=" + std::to_string(n)});
      continue;
    }
    if (c.dedup) seen.emplace(std::move(key), i);
    r.kept.push_back(lines[i]);
  }
  return r;
}

void AugmentationConfig::validate() const {
  for (double p : {p_punct_removal, p_diacritic_strip, p_case_variation, p_copy}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("augmentation probabilities must lie in [0, 1]");
  }
}

SentencePair augment_pair(const SentencePair& pair, const AugmentationConfig& c,
                          std::uint64_t record_index) {
  c.validate();
  CounterRng rng(c.seed, record_index);
  // Every draw is taken unconditionally so the stream layout is fixed.
  const double u_punct = rng.uniform();
  const double u_diacritic = rng.uniform();
  const double u_case = rng.uniform();
  const std::uint64_t case_variant = rng.below(3);
  const double u_copy = rng.uniform();

  SentencePair out = pair;
  auto apply_source = [&](std::string candidate, const char* name) {
    if (text::count_words(candidate) == 0) return;
    out.source = std::move(candidate);
    out.lineage.emplace_back(name);
  };
  if (u_punct < c.p_punct_removal) apply_source(text::strip_punct(out.source), "punct_removal");
  if (u_diacritic < c.p_diacritic_strip) apply_source(text::strip_diacritics(out.source), "diacritic_strip");
  if (u_case < c.p_case_variation) {
    auto vary = [&](const std::string& s) {
      switch (case_variant) {
        case 0: return text::to_lower(s);
        case 1: return text::to_upper(s);
        default: return text::to_title_first(s);
      }
    };
    out.source = vary(out.source);
    out.target = vary(out.target);
    static constexpr const char* kNames[] = {"case_lower", "case_upper", "case_title"};
    out.lineage.emplace_back(kNames[case_variant]);
  }
  if (u_copy < c.p_copy) {
    out.source = out.target;
    out.lineage.emplace_back("copy");
  }
  return out;
}

void TransliterationTable::add(std::string key, std::string replacement) {
  if (key.empty()) throw ContractViolation("transliteration table: empty key");
  text::require_utf8(key, "transliteration key");
  text::require_utf8(replacement, "transliteration replacement");
  const std::size_t len = key.size();
  if (!entries_.emplace(std::move(key), std::move(replacement)).second) {
    throw ContractViolation("transliteration table: duplicate key");
  }
  max_key_bytes_ = std::max(max_key_bytes_, len);
}

TransliterationTable TransliterationTable::from_tsv_content(std::string_view content,
                                                            const std::string& source) {
  TransliterationTable t;
  std::size_t line_no = 0, start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') {
      const auto f = io::split_tab(line);
      if (f.size() != 2) throw ParseError(source, line_no, start, "expected key<TAB>replacement");
      try {
        t.add(f[0], f[1]);
      } catch (const ContractViolation& e) {
        throw ParseError(source, line_no, start, e.what());
      }
    }
    start = end + 1;
  }
  return t;
}

TransliterationTable TransliterationTable::from_tsv(const std::filesystem::path& path) {
  return from_tsv_content(io::read_file(path), path.string());
}

std::string TransliterationTable::apply(std::string_view s) const {
  text::require_utf8(s, "transliterate input");
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_key_bytes_, s.size() - pos); len > 0; --len) {
      if (auto it = entries_.find(s.substr(pos, len)); it != entries_.end()) {
        out += it->second;
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      // Copy one code point.
      std::size_t len = 1;
      while (pos + len < s.size() && (static_cast<unsigned char>(s[pos + len]) & 0xC0) == 0x80) ++len;
      out.append(s.substr(pos, len));
      pos += len;
    }
  }
  return out;
}

std::string transliterate(std::string_view s, const TransliterationTable& table) {
  return table.apply(s);
}

std::string_view to_string(MixUnit u) { return u == MixUnit::pairs ? "pairs" : "tokens"; }

MixUnit parse_mix_unit(std::string_view s) {
  if (s == "pairs" || s == "records") return MixUnit::pairs;
  if (s == "tokens") return MixUnit::tokens;
  throw ContractViolation("unknown mixture unit '" + std::string(s) + "'");
}

void MixtureSpec::validate() const {
  if (components.empty()) throw ContractViolation("mixture: no components");
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw ContractViolation("mixture: component '" + c.name + "' needs a positive weight");
    }
  }
}

MixResult mix_corpora(const MixtureSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto counter = spec.token_counter ? spec.token_counter
                                          : std::function<std::size_t(std::string_view)>(count_tokens);
  const std::size_t k = spec.components.size();
  double weight_sum = 0.0;
  for (const auto& c : spec.components) weight_sum += c.weight;

  std::vector<std::vector<std::uint64_t>> units(k);
  MixResult result;
  result.manifest.unit = spec.unit;
  result.manifest.seed = seed;
  auto& man = result.manifest.components;
  man.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = spec.components[i];
    units[i].reserve(c.records.size());
    for (const auto& r : c.records) units[i].push_back(spec.unit == MixUnit::pairs ? 1 : counter(r));
    man[i].name = c.name;
    man[i].weight = c.weight;
    man[i].target_share = c.weight / weight_sum;
    man[i].available_units = std::accumulate(units[i].begin(), units[i].end(), std::uint64_t{0});
  }

  // Mixture size: requested, or the largest the scarcest component allows.
  double total;
  if (spec.total_units) {
    total = static_cast<double>(*spec.total_units);
  } else {
    total = std::numeric_limits<double>::infinity();
    for (const auto& m : man) total = std::min(total, static_cast<double>(m.available_units) / m.target_share);
  }
  for (auto& m : man) {
    const double want = total * m.target_share;
    if (spec.total_units) {
      m.quota_units = static_cast<std::uint64_t>(std::llround(want));
      if (m.quota_units > m.available_units) {
        throw ContractViolation("mixture: component '" + m.name + "' is short by " +
                                std::to_string(m.quota_units - m.available_units) + " " +
                                std::string(to_string(spec.unit)) + " (needs " +
                                std::to_string(m.quota_units) + ", has " +
                                std::to_string(m.available_units) + ")");
      }
    } else {
      m.quota_units = std::min<std::uint64_t>(
          m.available_units, static_cast<std::uint64_t>(std::floor(want + 1e-9)));
    }
  }

  std::uint64_t grand = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> order(units[i].size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, seed, i + 1);
    auto& m = man[i];
    for (std::size_t idx : order) {
      if (m.selected_units >= m.quota_units) break;
      const std::uint64_t u = units[i][idx];
      const std::uint64_t after = m.selected_units + u;
      if (after > m.quota_units) {
        // Take the record that straddles the quota only if that lands closer.
        if (after - m.quota_units >= m.quota_units - m.selected_units) break;
        m.selected_units = after;
        ++m.selected_records;
        result.records.push_back({i, spec.components[i].records[idx]});
        break;
      }
      m.selected_units = after;
      ++m.selected_records;
      result.records.push_back({i, spec.components[i].records[idx]});
    }
    grand += m.selected_units;
  }
  result.manifest.total_units = grand;
  for (auto& m : man) {
    m.realized_share = grand ? static_cast<double>(m.selected_units) / static_cast<double>(grand) : 0.0;
  }
  seeded_shuffle(result.records, seed, 0);
  return result;
}

std::string MixManifest::json() const {
  Json j;
  j["unit"] = to_string(unit);
  j["seed"] = seed;
  j["total_units"] = total_units;
  j["components"] = Json::array();
  for (const auto& c : components) {
    j["components"].push_back({{"name", c.name},
                               {"weight", c.weight},
                               {"target_share", c.target_share},
                               {"available_units", c.available_units},
                               {"quota_units", c.quota_units},
                               {"selected_units", c.selected_units},
                               {"selected_records", c.selected_records},
                               {"realized_share", c.realized_share}});
  }
  return j.dump(2) + "\n";
}

std::vector<SentencePair> load_bitext(const std::filesystem::path& path) {
  std::vector<SentencePair> out;
  if (path.extension() == ".jsonl") {
    io::for_each_jsonl(path, [&](const Json& j, std::size_t line) {
      try {
        SentencePair p;
        p.source = j.at("source").get<std::string>();
        p.target = j.at("target").get<std::string>();
        p.origin = parse_origin(j.value("origin", "human"));
        p.provenance = j.value("provenance", "");
        p.lineage = j.value("lineage", std::vector<std::string>{});
        out.push_back(std::move(p));
      } catch (const Json::exception& e) {
        throw ParseError(path.string(), line, 0, e.what());
      }
    });
    return out;
  }
  const std::string content = io::read_file(path);
  if (auto bad = text::find_invalid_utf8(content)) throw DecodeError(path.string(), *bad);
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_tab(lines[i]);
    if (f.size() != 2) throw ParseError(path.string(), i + 1, 0, "expected source<TAB>target");
    out.push_back({f[0], f[1], Origin::human, path.filename().string(), {}});
  }
  return out;
}

std::string bitext_to_jsonl(std::span<const SentencePair> pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) {
    rows.push_back({{"source", p.source}, {"target", p.target}, {"origin", to_string(p.origin)},
                    {"provenance", p.provenance}, {"lineage", p.lineage}});
  }
  return io::to_jsonl(rows);
}

std::string bitext_to_tsv(std::span<const SentencePair> pairs) {
  std::string out;
  for (const auto& p : pairs) out += p.source + "\t" + p.target + "\n";
  return out;
}

std::string rejections_to_jsonl(std::span<const Rejection> rejections) {
  std::vector<Json> rows;
  rows.reserve(rejections.size());
  for (const auto& r : rejections) {
    rows.push_back({{"record_index", r.record_index}, {"reason", to_string(r.reason)}, {"detail", r.detail}});
  }
  return io::to_jsonl(rows);
}

}  // namespace byol::refinery
