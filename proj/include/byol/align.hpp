#pragma once

// Structural validation of JSON Lines sentence alignments of the form
//   {"source": ["..."], "target": ["..."]}

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace byol::align {

struct AlignmentRecord {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::size_t ordinal = 0;  // 0-based record index in the file
  std::size_t line = 0;     // 1-based line number
};

enum class AlignmentType { one_to_one, one_to_many, many_to_one, many_to_many };
std::string_view to_string(AlignmentType t);
AlignmentType alignment_type(const AlignmentRecord& r);

struct ParseFailure {
  std::size_t ordinal;
  std::size_t line;
  std::size_t byte_offset;  // within the file
  std::string detail;
};

struct ParsedAlignments {
  std::vector<AlignmentRecord> records;
  std::vector<ParseFailure> failures;
  std::size_t total = 0;  // non-blank lines
};

// Each non-blank line must be a JSON object with exactly the keys "source" and
// "target", each an array of strings. Offending lines become failures.
ParsedAlignments parse_alignment_records(const std::filesystem::path& path);
ParsedAlignments parse_alignment_content(std::string_view content, const std::string& source);

// Jaccard similarity of character trigram multisets (sum of minimum counts
// over sum of maximum counts) after NFC, lower-casing and whitespace
// collapsing. Inputs too short for a trigram score 1.0 when equal after
// normalization and 0.0 otherwise.
double overlap_ratio(std::string_view a, std::string_view b);

struct ValidationOptions {
  double overlap_threshold = 0.70;  // strictly greater is rejected
};

struct Span {
  std::size_t begin;  // sentence indices, half-open
  std::size_t end;
};

struct RuleViolation {
  std::size_t ordinal;
  std::string rule;  // non_empty, same_language, unlocated, contiguity, monotonicity, overlap, parse
  std::string detail;
};

struct AcceptedRecord {
  std::size_t ordinal;
  std::optional<Span> source_span;
  std::optional<Span> target_span;
};

struct ValidationReport {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::vector<RuleViolation> rejections;  // ordinal order
  std::vector<AcceptedRecord> accepted_records;
  std::map<std::string, std::size_t> histogram;  // over all well-formed records
  bool source_order_evaluated = false;
  bool target_order_evaluated = false;

  std::string violations_jsonl() const;
  std::string summary() const;
};

// Structural checks always run. When a document is supplied, each record's
// segments are located as runs of consecutive document sentences (whitespace
// collapsed) and the located spans must be contiguous within a record,
// non-overlapping with and after the previous accepted record.
ValidationReport validate_alignment(std::span<const AlignmentRecord> records,
                                    const std::optional<std::vector<std::string>>& source_doc,
                                    const std::optional<std::vector<std::string>>& target_doc,
                                    const ValidationOptions& options = {});

// Also folds the parse failures of `parsed` into the report.
ValidationReport validate_alignment(const ParsedAlignments& parsed,
                                    const std::optional<std::vector<std::string>>& source_doc,
                                    const std::optional<std::vector<std::string>>& target_doc,
                                    const ValidationOptions& options = {});

}  // namespace byol::align
