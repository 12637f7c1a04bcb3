#pragma once

// UTF-8 and Unicode helpers shared by every module. Normalization and
// character classes come from ICU; everything here operates on UTF-8 bytes.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace byol::text {

// Byte offset of the first invalid sequence, or nullopt when `s` is valid UTF-8.
std::optional<std::size_t> find_invalid_utf8(std::string_view s);

// Throws DecodeError naming `where` when `s` is not valid UTF-8.
void require_utf8(std::string_view s, const std::string& where);

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

std::string nfc(std::string_view s);
std::string nfd(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
// Upper-cases the first letter, lower-cases the rest.
std::string to_title_first(std::string_view s);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);  // general category P*
bool is_mark(char32_t cp);   // general category M*

// Maximal non-whitespace runs.
std::vector<std::string> split_ws(std::string_view s);
std::size_t count_words(std::string_view s);

// Trim and collapse internal whitespace runs to a single ASCII space.
std::string collapse_ws(std::string_view s);

std::size_t codepoint_length(std::string_view s);

// Removes every P* character, then collapses whitespace.
std::string strip_punct(std::string_view s);
// NFD, drop combining marks, NFC.
std::string strip_diacritics(std::string_view s);

// NFC, then every punctuation character becomes its own token, then split on
// whitespace.
std::vector<std::string> tokenize_international(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace byol::text
