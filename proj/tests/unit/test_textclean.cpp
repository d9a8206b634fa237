#include <string>
#include <vector>

#include <doctest.h>

#include "stprep/errors.hpp"
#include "stprep/textclean.hpp"

using namespace stprep;

namespace {

std::string repeat(const std::string& unit, std::size_t n) {
  std::string out;
  out.reserve(unit.size() * n);
  for (std::size_t i = 0; i < n; ++i) out += unit;
  return out;
}

}  // namespace

TEST_CASE("token length caps count Unicode scalars") {
  CleanRules rules;  // 50 default, 150 for ja/zh

  CHECK(!check_text(repeat("a", 50), "en", rules).has_value());
  CHECK(check_text(repeat("a", 51), "en", rules) == RejectReason::kTokenLength);

  // Multi-byte scalars: 150 Hiragana characters are 450 bytes but 150 chars.
  CHECK(!check_text(repeat("\xE3\x81\x82", 150), "ja", rules).has_value());
  CHECK(check_text(repeat("\xE3\x81\x82", 151), "ja", rules) ==
        RejectReason::kTokenLength);
  CHECK(!check_text(repeat("\xE4\xB8\xAD", 150), "zh", rules).has_value());

  // The 51-char token trips even when surrounded by short tokens.
  CHECK(check_text("ok " + repeat("x", 51) + " ok", "en", rules) ==
        RejectReason::kTokenLength);
  // ...but a 51-char ja token is fine under the ja cap.
  CHECK(!check_text(repeat("a", 51), "ja", rules).has_value());
}

TEST_CASE("URL and markup rejection") {
  CleanRules rules;
  CHECK(check_text("see http://example.com now", "en", rules) ==
        RejectReason::kUrl);
  CHECK(check_text("see https://example.com", "en", rules) == RejectReason::kUrl);
  CHECK(check_text("some <b>bold</b> text", "en", rules) == RejectReason::kUrl);
  CHECK(check_text("a < b and c > d", "en", rules) == RejectReason::kUrl);
  // '<' with no '>' after it is not markup
  CHECK(!check_text("a > b and c < d", "en", rules).has_value());
  CHECK(!check_text("plain sentence", "en", rules).has_value());
  // http without the scheme separator is fine
  CHECK(!check_text("httpx example com", "en", rules).has_value());

  rules.reject_urls = false;
  CHECK(!check_text("see http://example.com", "en", rules).has_value());
}

TEST_CASE("non-printing rejection") {
  CleanRules rules;
  CHECK(check_text(std::string("bell\x07here"), "en", rules) ==
        RejectReason::kNonPrinting);
  // U+200B zero width space (Cf)
  CHECK(check_text("a\xE2\x80\x8B""b", "en", rules) == RejectReason::kNonPrinting);
  // U+E000 private use (Co)
  CHECK(check_text("a\xEE\x80\x80""b", "en", rules) == RejectReason::kNonPrinting);
  // U+0378 unassigned (Cn)
  CHECK(check_text("a\xCD\xB8""b", "en", rules) == RejectReason::kNonPrinting);
  // tab is whitespace, not a control for our purposes
  CHECK(!check_text("a\tb", "en", rules).has_value());
  // U+00A0 no-break space and CJK text pass
  CHECK(!check_text("a\xC2\xA0""b", "en", rules).has_value());
  CHECK(!check_text("\xE6\x97\xA5\xE6\x9C\xAC", "ja", rules).has_value());

  rules.reject_nonprinting = false;
  CHECK(!check_text(std::string("bell\x07here"), "en", rules).has_value());
}

TEST_CASE("invalid UTF-8 rejection") {
  CleanRules rules;
  CHECK(check_text("\xFF", "en", rules) == RejectReason::kInvalid);
  CHECK(check_text("trunc \xE3\x81", "en", rules) == RejectReason::kInvalid);
  // overlong encoding of '/'
  CHECK(check_text("\xC0\xAF", "en", rules) == RejectReason::kInvalid);
  // UTF-16 surrogate half encoded as UTF-8
  CHECK(check_text("\xED\xA0\x80", "en", rules) == RejectReason::kInvalid);
  // 0x110000 is outside Unicode
  CHECK(check_text("\xF4\x90\x80\x80", "en", rules) == RejectReason::kInvalid);
}

TEST_CASE("rejection reasons are checked in a fixed order") {
  CleanRules rules;
  // invalid UTF-8 beats URL
  CHECK(check_text("http://x \xFF", "en", rules) == RejectReason::kInvalid);
  // non-printing beats URL
  CHECK(check_text("\x07 http://x", "en", rules) == RejectReason::kNonPrinting);
  // URL beats token length
  CHECK(check_text("http://" + repeat("a", 60), "en", rules) ==
        RejectReason::kUrl);
}

TEST_CASE("normalize_whitespace") {
  CHECK(normalize_whitespace("  a\t\tb  ") == "a b");
  CHECK(normalize_whitespace("a  b") == "a b");
  CHECK(normalize_whitespace("") == "");
  CHECK(normalize_whitespace(" \t ") == "");
  CHECK(normalize_whitespace("plain") == "plain");
}

TEST_CASE("clean keeps, normalizes and is idempotent") {
  CleanRules rules;
  const std::vector<SentenceRecord> records = {
      {"1", "en", "  hello   world "},
      {"2", "en", "see http://spam"},
      {"3", "en", "fine"},
  };
  CleanReport report;
  const auto kept = clean(records, rules, &report);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].text == "hello world");
  CHECK(kept[1].text == "fine");
  CHECK(report.input == 3);
  CHECK(report.kept == 2);
  CHECK(report.rejected_url == 1);
  CHECK(report.input == report.kept + report.rejected_total());

  CleanReport second;
  const auto again = clean(kept, rules, &second);
  CHECK(again.size() == kept.size());
  CHECK(second.rejected_total() == 0);
  for (std::size_t i = 0; i < kept.size(); ++i) CHECK(again[i].text == kept[i].text);
}

TEST_CASE("clean_bitext rejects the pair when either side fails") {
  CleanRules rules;
  const std::vector<BitextRecord> records = {
      {"1", "en", "good", "de", "gut"},
      {"2", "en", "good", "de", "siehe http://spam"},
      {"3", "en", "\xFF", "de", "gut"},
      {"4", "en", "", "de", "gut"},
  };
  CleanReport report;
  const auto kept = clean_bitext(records, rules, &report);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "1");
  CHECK(report.input == 4);
  CHECK(report.rejected_url == 1);
  CHECK(report.rejected_invalid == 2);  // bad UTF-8 and the empty side
  CHECK(report.input == report.kept + report.rejected_total());
}

TEST_CASE("bitext sides use their own language caps") {
  CleanRules rules;
  // 100-char token: over the en cap, under the ja cap.
  BitextRecord rec{"1", "en", "ok", "ja", repeat("\xE3\x81\x82", 100)};
  CHECK(!check_bitext_record(rec, rules).has_value());
  rec.tgt_lang = "en";  // same text, stricter cap
  CHECK(check_bitext_record(rec, rules) == RejectReason::kTokenLength);
}

TEST_CASE("deduplicate keeps first occurrence in order") {
  const std::vector<SentenceRecord> records = {
      {"1", "en", "hello world"}, {"2", "en", "unique"},
      {"3", "en", "hello  world"},  // same after normalization
      {"4", "en", "Hello world"},   // case matters
      {"5", "en", "hello world"},
  };
  std::size_t removed = 0;
  const auto kept = deduplicate(records, &removed);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].id == "1");
  CHECK(kept[1].id == "2");
  CHECK(kept[2].id == "4");
  CHECK(removed == 2);

  std::size_t none = 0;
  const auto unique_kept = deduplicate(kept, &none);
  CHECK(unique_kept.size() == kept.size());
  CHECK(none == 0);
}

TEST_CASE("DedupSet is first-writer-wins") {
  DedupSet set;
  CHECK(set.insert("a"));
  CHECK(!set.insert("a"));
  CHECK(set.insert("b"));
  CHECK(set.size() == 2);
}

TEST_CASE("clean rules validation") {
  CleanRules bad;
  bad.default_max_token_chars = 0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CleanRules bad2;
  bad2.max_token_chars["en"] = 0;
  CHECK_THROWS_AS(bad2.validate(), ParameterError);
}
