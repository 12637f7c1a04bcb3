#include <doctest.h>

#include "byol/digest.hpp"
#include "byol/error.hpp"
#include "byol/io.hpp"
#include "byol/text.hpp"
#include "support.hpp"

using namespace byol;

TEST_CASE("utf8 validation reports the first bad byte") {
  CHECK_FALSE(text::find_invalid_utf8("Malaŵi ᓄᓇᕗᑦ").has_value());
  const std::string bad = std::string("ab") + '\xC3' + "(";
  REQUIRE(text::find_invalid_utf8(bad).has_value());
  CHECK(*text::find_invalid_utf8(bad) == 2);
  CHECK_THROWS_AS(text::require_utf8(bad, "x"), DecodeError);
  CHECK(text::find_invalid_utf8("\xED\xA0\x80").has_value());  // surrogate
  CHECK(text::find_invalid_utf8("\xC0\xAF").has_value());      // overlong
}

TEST_CASE("normalization and case helpers") {
  CHECK(text::nfc("e\xCC\x81") == "\xC3\xA9");
  CHECK(text::strip_diacritics("crème brûlée") == "creme brulee");
  CHECK(text::strip_punct("Hello, world!") == "Hello world");
  CHECK(text::collapse_ws("  a \t b\n c ") == "a b c");
  CHECK(text::to_title_first("hELLO") == "Hello");
  CHECK(text::codepoint_length("ᓄᓇ") == 2);
  CHECK(text::count_words(" one  two\tthree ") == 3);
}

TEST_CASE("international tokenizer splits punctuation") {
  const auto t = text::tokenize_international("Hello, world! 3.5%");
  const std::vector<std::string> want{"Hello", ",", "world", "!", "3", ".", "5", "%"};
  CHECK(t == want);
}

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 a, b;
  a.field("ab").field("c");
  b.field("a").field("bc");
  CHECK(a.hex() != b.hex());
}

TEST_CASE("counter rng is order independent and unbiased in range") {
  CounterRng x(7, 3), y(7, 3), z(7, 4);
  CHECK(x.next() == y.next());
  CHECK(x.next() != z.next());
  CounterRng r(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
  }
  CHECK(stage_seed(5, "mix") == stage_seed(5, "mix"));
  CHECK(stage_seed(5, "mix") != stage_seed(5, "filter"));
}

TEST_CASE("fixed rounds half to even") {
  CHECK(io::fixed(0.125, 2) == "0.12");
  CHECK(io::fixed(0.375, 2) == "0.38");
  CHECK(io::fixed(57.2592) == "57.26");
  CHECK(io::fixed(2.5, 0) == "2");
  CHECK(io::fixed(0.3, 1) == "0.3");
}

TEST_CASE("jsonl reader reports line and offset") {
  std::size_t n = 0;
  io::for_each_jsonl(std::string_view("{\"a\":1}\n\n{\"a\":2}\n"), "mem", [&](const io::Json& j, std::size_t) {
    n += j.at("a").get<std::size_t>();
  });
  CHECK(n == 3);
  try {
    io::for_each_jsonl(std::string_view("{\"a\":1}\nnot json\n"), "mem", [](const io::Json&, std::size_t) {});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.byte_offset() >= 8);  // within the second line, which starts at byte 8
    CHECK(e.byte_offset() < 16);
  }
}

TEST_CASE("atomic write round trip") {
  support::TempDir dir("io");
  const auto p = dir / "sub/out.txt";
  io::write_file(p, "hello\n");
  CHECK(io::read_file(p) == "hello\n");
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), IoError);
  CHECK(io::split_tab("a\t\tb").size() == 3);
}
