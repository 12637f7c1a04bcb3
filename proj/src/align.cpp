#include "byol/align.hpp"

#include <algorithm>
#include <map>

#include "byol/error.hpp"
#include "byol/io.hpp"
#include "byol/text.hpp"

namespace byol::align {

using io::Json;

std::string_view to_string(AlignmentType t) {
  switch (t) {
    case AlignmentType::one_to_one: return "1-1";
    case AlignmentType::one_to_many: return "1-N";
    case AlignmentType::many_to_one: return "M-1";
    case AlignmentType::many_to_many: return "M-N";
  }
  return "?";
}

AlignmentType alignment_type(const AlignmentRecord& r) {
  const bool many_src = r.source.size() > 1, many_tgt = r.target.size() > 1;
  if (many_src && many_tgt) return AlignmentType::many_to_many;
  if (many_src) return AlignmentType::many_to_one;
  if (many_tgt) return AlignmentType::one_to_many;
  return AlignmentType::one_to_one;
}

ParsedAlignments parse_alignment_content(std::string_view content, const std::string& source) {
  ParsedAlignments out;
  std::size_t start = 0, line_no = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = start;
    start = end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::size_t ordinal = out.total++;
    auto fail = [&](std::size_t offset, std::string detail) {
      out.failures.push_back({ordinal, line_no, line_start + offset, std::move(detail)});
    };
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail(e.byte > 0 ? e.byte - 1 : 0, "malformed JSON");
      continue;
    }
    if (!j.is_object()) {
      fail(0, "expected a JSON object");
      continue;
    }
    std::string problem;
    for (const auto& [key, _] : j.items()) {
      if (key != "source" && key != "target") {
        problem = "unexpected key '" + key + "'";
        break;
      }
    }
    for (const char* key : {"source", "target"}) {
      if (problem.empty() && !j.contains(key)) problem = std::string("missing key '") + key + "'";
    }
    AlignmentRecord rec;
    rec.ordinal = ordinal;
    rec.line = line_no;
    auto read_side = [&](const char* key, std::vector<std::string>& side) {
      if (!problem.empty()) return;
      const Json& v = j.at(key);
      if (!v.is_array()) {
        problem = std::string("'") + key + "' must be an array of strings";
        return;
      }
      for (const auto& s : v) {
        if (!s.is_string()) {
          problem = std::string("'") + key + "' must be an array of strings";
          return;
        }
        side.push_back(s.get<std::string>());
      }
    };
    read_side("source", rec.source);
    read_side("target", rec.target);
    if (!problem.empty()) {
      fail(0, problem);
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  (void)source;
  return out;
}

ParsedAlignments parse_alignment_records(const std::filesystem::path& path) {
  const std::string content = io::read_file(path);
  if (auto bad = text::find_invalid_utf8(content)) throw DecodeError(path.string(), *bad);
  return parse_alignment_content(content, path.string());
}

namespace {

std::string normalize_segment(std::string_view s) { return text::collapse_ws(text::nfc(s)); }

}  // namespace

double overlap_ratio(std::string_view a, std::string_view b) {
  const std::u32string na = text::decode(text::to_lower(normalize_segment(a)));
  const std::u32string nb = text::decode(text::to_lower(normalize_segment(b)));
  auto trigrams = [](const std::u32string& s) {
    std::map<std::u32string, std::size_t> m;
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) ++m[s.substr(i, 3)];
    return m;
  };
  const auto ta = trigrams(na), tb = trigrams(nb);
  if (ta.empty() || tb.empty()) return (ta.empty() && tb.empty() && na == nb) ? 1.0 : 0.0;
  std::size_t inter = 0, uni = 0;
  auto ia = ta.begin();
  auto ib = tb.begin();
  while (ia != ta.end() || ib != tb.end()) {
    if (ib == tb.end() || (ia != ta.end() && ia->first < ib->first)) {
      uni += ia->second;
      ++ia;
    } else if (ia == ta.end() || ib->first < ia->first) {
      uni += ib->second;
      ++ib;
    } else {
      inter += std::min(ia->second, ib->second);
      uni += std::max(ia->second, ib->second);
      ++ia, ++ib;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Runs [b, e) of document sentences whose joined text equals `segment`.
std::vector<Span> find_runs(const std::vector<std::string>& doc, const std::string& segment) {
  std::vector<Span> out;
  for (std::size_t b = 0; b < doc.size(); ++b) {
    if (doc[b].empty() || segment.compare(0, doc[b].size(), doc[b]) != 0) continue;
    std::string acc;
    for (std::size_t e = b; e < doc.size(); ++e) {
      if (!doc[e].empty()) {
        if (!acc.empty()) acc.push_back(' ');
        acc += doc[e];
      }
      if (acc.size() > segment.size()) break;
      if (acc == segment) {
        out.push_back({b, e + 1});
        break;
      }
    }
  }
  return out;
}

struct SideCheck {
  std::optional<Span> span;
  std::string rule;
  std::string detail;
};

SideCheck check_side(const std::vector<std::string>& segments, const std::vector<std::string>& doc,
                     std::optional<Span> previous, const char* side) {
  SideCheck c;
  std::size_t cursor = previous ? previous->end : 0;
  std::optional<Span> first, last;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto runs = find_runs(doc, normalize_segment(segments[k]));
    if (runs.empty()) {
      c.rule = "unlocated";
      c.detail = std::string(side) + " segment " + std::to_string(k) + " not found in document";
      return c;
    }
    // Prefer the earliest run at or after the cursor.
    auto it = std::find_if(runs.begin(), runs.end(), [&](const Span& s) { return s.begin >= cursor; });
    const Span run = it != runs.end() ? *it : runs.front();
    if (last && run.begin != last->end) {
      c.rule = "contiguity";
      c.detail = std::string(side) + " segment " + std::to_string(k) + " at sentence " +
                 std::to_string(run.begin) + " does not follow sentence " + std::to_string(last->end - 1);
      return c;
    }
    if (!first) first = run;
    last = run;
    cursor = run.end;
  }
  const Span span{first->begin, last->end};
  if (previous && span.begin < previous->end) {
    const bool intersects = span.end > previous->begin;
    c.rule = intersects ? "overlap" : "monotonicity";
    c.detail = std::string(side) + " span [" + std::to_string(span.begin) + "," +
               std::to_string(span.end) + ") " + (intersects ? "overlaps" : "precedes") +
               " previous span [" + std::to_string(previous->begin) + "," +
               std::to_string(previous->end) + ")";
    return c;
  }
  c.span = span;
  return c;
}

std::vector<std::string> normalized_doc(const std::vector<std::string>& doc) {
  std::vector<std::string> out;
  out.reserve(doc.size());
  for (const auto& s : doc) out.push_back(normalize_segment(s));
  return out;
}

bool blank(const std::string& s) { return text::count_words(s) == 0; }

}  // namespace

ValidationReport validate_alignment(std::span<const AlignmentRecord> records,
                                    const std::optional<std::vector<std::string>>& source_doc,
                                    const std::optional<std::vector<std::string>>& target_doc,
                                    const ValidationOptions& options) {
  ValidationReport report;
  report.total = records.size();
  report.source_order_evaluated = source_doc.has_value();
  report.target_order_evaluated = target_doc.has_value();
  const auto src_doc = source_doc ? normalized_doc(*source_doc) : std::vector<std::string>{};
  const auto tgt_doc = target_doc ? normalized_doc(*target_doc) : std::vector<std::string>{};
  std::optional<Span> prev_src, prev_tgt;

  for (const auto& r : records) {
    ++report.histogram[std::string(to_string(alignment_type(r)))];
    auto reject = [&](std::string rule, std::string detail) {
      report.rejections.push_back({r.ordinal, std::move(rule), std::move(detail)});
    };
    if (r.source.empty() || r.target.empty() ||
        std::any_of(r.source.begin(), r.source.end(), blank) ||
        std::any_of(r.target.begin(), r.target.end(), blank)) {
      reject("non_empty", "source and target need at least one non-blank segment each");
      continue;
    }
    const double ov = overlap_ratio(text::join(r.source, " "), text::join(r.target, " "));
    if (ov > options.overlap_threshold) {
      reject("same_language", "trigram overlap " + io::fixed(ov, 4) + " exceeds " +
                                  io::shortest(options.overlap_threshold));
      continue;
    }
    AcceptedRecord acc{r.ordinal, std::nullopt, std::nullopt};
    if (source_doc) {
      auto c = check_side(r.source, src_doc, prev_src, "source");
      if (!c.span) {
        reject(c.rule, c.detail);
        continue;
      }
      acc.source_span = c.span;
    }
    if (target_doc) {
      auto c = check_side(r.target, tgt_doc, prev_tgt, "target");
      if (!c.span) {
        reject(c.rule, c.detail);
        continue;
      }
      acc.target_span = c.span;
    }
    if (acc.source_span) prev_src = acc.source_span;
    if (acc.target_span) prev_tgt = acc.target_span;
    report.accepted_records.push_back(acc);
    ++report.accepted;
  }
  return report;
}

ValidationReport validate_alignment(const ParsedAlignments& parsed,
                                    const std::optional<std::vector<std::string>>& source_doc,
                                    const std::optional<std::vector<std::string>>& target_doc,
                                    const ValidationOptions& options) {
  ValidationReport report = validate_alignment(parsed.records, source_doc, target_doc, options);
  report.total = parsed.total;
  for (const auto& f : parsed.failures) {
    report.rejections.push_back({f.ordinal, "parse",
                                 "line " + std::to_string(f.line) + " byte " +
                                     std::to_string(f.byte_offset) + ": " + f.detail});
  }
  std::stable_sort(report.rejections.begin(), report.rejections.end(),
                   [](const RuleViolation& a, const RuleViolation& b) { return a.ordinal < b.ordinal; });
  return report;
}

std::string ValidationReport::violations_jsonl() const {
  std::vector<Json> rows;
  for (const auto& v : rejections) {
    rows.push_back({{"ordinal", v.ordinal}, {"rule", v.rule}, {"detail", v.detail}});
  }
  return io::to_jsonl(rows);
}

std::string ValidationReport::summary() const {
  std::vector<std::vector<std::string>> rows{
      {"records", std::to_string(total)},
      {"accepted", std::to_string(accepted)},
      {"rejected", std::to_string(rejections.size())},
      {"source order", source_order_evaluated ? "evaluated" : "not evaluated"},
      {"target order", target_order_evaluated ? "evaluated" : "not evaluated"},
  };
  for (const char* t : {"1-1", "1-N", "M-1", "M-N"}) {
    auto it = histogram.find(t);
    rows.push_back({std::string("type ") + t, std::to_string(it == histogram.end() ? 0 : it->second)});
  }
  std::map<std::string, std::size_t> by_rule;
  for (const auto& v : rejections) ++by_rule[v.rule];
  for (const auto& [rule, n] : by_rule) rows.push_back({"rule " + rule, std::to_string(n)});
  return io::render_table({"item", "count"}, rows);
}

}  // namespace byol::align
