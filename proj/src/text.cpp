#include "byol/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "byol/error.hpp"

namespace byol::text {

namespace {

// Length of the sequence starting at s[i], or 0 when it is malformed.
std::size_t sequence_length(std::string_view s, std::size_t i, char32_t* out) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    *out = b0;
    return 1;
  }
  std::size_t len;
  char32_t cp;
  char32_t min;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  *out = cp;
  return len;
}

const icu::Normalizer2& normalizer(bool compose) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = compose ? icu::Normalizer2::getNFCInstance(status)
                                      : icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU normalizer unavailable");
  return *n;
}

std::string normalize(std::string_view s, bool compose) {
  const auto& n = normalizer(compose);
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  UErrorCode status = U_ZERO_ERROR;
  if (n.isNormalized(src, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString dst = n.normalize(src, status);
  if (U_FAILURE(status)) throw Error("ICU normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

}  // namespace

std::optional<std::size_t> find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t len = sequence_length(s, i, &cp);
    if (len == 0) return i;
    i += len;
  }
  return std::nullopt;
}

void require_utf8(std::string_view s, const std::string& where) {
  if (auto bad = find_invalid_utf8(s)) throw DecodeError(where, *bad);
}

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t len = sequence_length(s, i, &cp);
    if (len == 0) throw DecodeError("decode", i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::string nfc(std::string_view s) { return normalize(s, true); }
std::string nfd(std::string_view s) { return normalize(s, false); }

std::string to_lower(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::string to_upper(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toUpper(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::string to_title_first(std::string_view s) {
  const std::string lower = to_lower(s);
  std::u32string cps = decode(lower);
  for (char32_t& cp : cps) {
    if (u_isalpha(static_cast<UChar32>(cp))) {
      const std::string one = to_upper(encode(std::u32string_view(&cp, 1)));
      const std::u32string up = decode(one);
      // Only single-codepoint upper-case mappings are applied in place.
      if (up.size() == 1) cp = up[0];
      break;
    }
  }
  return encode(cps);
}

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_punct(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_P_MASK) != 0;
}

bool is_mark(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_M_MASK) != 0;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    std::size_t len = sequence_length(s, i, &cp);
    if (len == 0) throw DecodeError("split", i);
    if (is_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.append(s.substr(i, len));
    }
    i += len;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t count_words(std::string_view s) {
  std::size_t words = 0;
  bool in_word = false;
  std::size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    const std::size_t len = sequence_length(s, i, &cp);
    if (len == 0) throw DecodeError("count", i);
    const bool space = cp < 0x80 ? (cp == ' ' || (cp >= '\t' && cp <= '\r')) : is_space(cp);
    if (!space && !in_word) ++words;
    in_word = !space;
    i += len;
  }
  return words;
}

std::string collapse_ws(std::string_view s) { return join(split_ws(s), " "); }

std::size_t codepoint_length(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string strip_punct(std::string_view s) {
  std::u32string cps = decode(s);
  std::u32string kept;
  kept.reserve(cps.size());
  for (char32_t cp : cps) {
    if (!is_punct(cp)) kept.push_back(cp);
  }
  return collapse_ws(encode(kept));
}

std::string strip_diacritics(std::string_view s) {
  std::u32string cps = decode(nfd(s));
  std::u32string kept;
  kept.reserve(cps.size());
  for (char32_t cp : cps) {
    if (!is_mark(cp)) kept.push_back(cp);
  }
  return nfc(encode(kept));
}

std::vector<std::string> tokenize_international(std::string_view s) {
  const std::u32string cps = decode(nfc(s));
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
  };
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      append_utf8(cur, cp);
      flush();
    } else {
      append_utf8(cur, cp);
    }
  }
  flush();
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace byol::text
