#include <gtest/gtest.h>

#include "memharvest/charset.h"
#include "memharvest/error.h"
#include "support/gen.h"

namespace memharvest {
namespace {

HeaderList content_type(const std::string& value) {
  return {{"Content-Type", value}};
}

TEST(ContentTypeParse, Examples) {
  EXPECT_EQ(parse_content_type("text/html; charset=utf-8"), (ContentType{"text/html", "utf-8"}));
  EXPECT_EQ(parse_content_type("text/html"), (ContentType{"text/html", std::nullopt}));
  EXPECT_EQ(parse_content_type("application/pdf"), (ContentType{"application/pdf", std::nullopt}));
  EXPECT_EQ(parse_content_type(" Text/HTML ;Charset=\"ISO-8859-1\""), (ContentType{"text/html", "iso-8859-1"}));
  EXPECT_EQ(parse_content_type("text/html;charset=UTF-8;q=1"), (ContentType{"text/html", "utf-8"}));
  EXPECT_EQ(parse_content_type("  garbage  "), (ContentType{"garbage", std::nullopt}));
  EXPECT_EQ(parse_content_type(""), (ContentType{"", std::nullopt}));
}

TEST(ContentTypeParse, HtmlTypes) {
  EXPECT_TRUE(is_html_media_type("text/html"));
  EXPECT_TRUE(is_html_media_type("application/xhtml+xml"));
  EXPECT_FALSE(is_html_media_type("application/pdf"));
  EXPECT_FALSE(is_html_media_type("text/plain"));
}

TEST(XmlDeclaration, Encoding) {
  EXPECT_EQ(xml_declared_encoding(R"(<?xml version="1.0" encoding="ISO-8859-1"?><html>)"), "iso-8859-1");
  EXPECT_EQ(xml_declared_encoding("\xEF\xBB\xBF<?xml version='1.0' encoding='utf-8'?>"), "utf-8");
  EXPECT_FALSE(xml_declared_encoding(R"(<?xml version="1.0"?><html>)"));
  EXPECT_FALSE(xml_declared_encoding(R"(<html><?xml version="1.0" encoding="latin1"?>)"));
}

TEST(Decode, StrictAndLenient) {
  EXPECT_EQ(decode_strict("caf\xE9", "iso-8859-1"), "caf\xC3\xA9");
  EXPECT_EQ(decode_strict("caf\xE9", "windows-1252"), "caf\xC3\xA9");
  EXPECT_FALSE(decode_strict("caf\xE9", "utf-8"));
  EXPECT_FALSE(decode_strict("\xE2\x82", "utf-8"));  // truncated
  EXPECT_FALSE(decode_strict("abc", "no-such-charset"));
  EXPECT_EQ(decode_lenient("a\xFF" "b", "utf-8"), "a\xEF\xBF\xBD" "b");
  EXPECT_EQ(decode_lenient("a\xE9", "no-such-charset"), "a\xEF\xBF\xBD");
  EXPECT_TRUE(is_known_charset("latin1"));
  EXPECT_TRUE(is_known_charset("Shift_JIS"));
  EXPECT_FALSE(is_known_charset("x-unknown-thing"));
}

TEST(DetectCharset, HeaderCharsetKept) {
  EXPECT_EQ(detect_charset(content_type("text/html; charset=iso-8859-1"), "<p>caf\xE9</p>"),
            (CharsetDecision{"iso-8859-1", CharsetSource::kContentTypeHeader}));
}

TEST(DetectCharset, DefaultUtf8) {
  EXPECT_EQ(detect_charset(content_type("text/html"), "<p>\xC5\x81\xC3\xB3""d\xC5\xBA</p>"),
            (CharsetDecision{"utf-8", CharsetSource::kDefaultUtf8}));
  EXPECT_EQ(detect_charset({}, "<p>plain</p>"), (CharsetDecision{"utf-8", CharsetSource::kDefaultUtf8}));
}

TEST(DetectCharset, XmlDeclarationOverridesHeader) {
  EXPECT_EQ(detect_charset(content_type("text/html; charset=utf-8"),
                           "<?xml version=\"1.0\" encoding=\"ISO-8859-1\"?><p>caf\xE9</p>"),
            (CharsetDecision{"iso-8859-1", CharsetSource::kXmlDeclaration}));
}

TEST(DetectCharset, FallbackToUtf8) {
  // UTF-8 "あ" followed by '<' is not valid Shift_JIS (0x82 0x3C).
  EXPECT_EQ(detect_charset(content_type("text/html; charset=shift_jis"), "<p>\xE3\x81\x82</p>"),
            (CharsetDecision{"utf-8", CharsetSource::kFallbackUtf8}));
}

TEST(DetectCharset, UnknownLabelFallsBack) {
  EXPECT_EQ(detect_charset(content_type("text/html; charset=x-bogus"), "<p>ok</p>"),
            (CharsetDecision{"utf-8", CharsetSource::kFallbackUtf8}));
}

TEST(DetectCharset, UndecodableThrows) {
  EXPECT_THROW(detect_charset(content_type("text/html; charset=us-ascii"), "<p>caf\xE9</p>"), Undecodable);
}

TEST(DecodeBody, LenientAfterUndecodable) {
  DecodedBody body = decode_body(content_type("text/html; charset=us-ascii"), "caf\xE9", false);
  EXPECT_TRUE(body.undecodable);
  EXPECT_EQ(body.decision, (CharsetDecision{"utf-8", CharsetSource::kFallbackUtf8}));
  EXPECT_EQ(body.text, "caf\xEF\xBF\xBD");
  EXPECT_THROW(decode_body(content_type("text/html; charset=us-ascii"), "caf\xE9", true), Undecodable);
}

TEST(CharsetSourceNames, RoundTrip) {
  for (auto s : {CharsetSource::kContentTypeHeader, CharsetSource::kXmlDeclaration, CharsetSource::kDefaultUtf8,
                 CharsetSource::kFallbackUtf8})
    EXPECT_EQ(charset_source_from_string(to_string(s)), s);
  EXPECT_FALSE(charset_source_from_string("sniffed"));
}

// Every byte string gets a decision or Undecodable, and a decision always
// names a charset that decodes the body.
TEST(DetectCharsetProperty, Totality) {
  gen::Engine rng(424242);
  const std::vector<std::string> labels = {"", "utf-8", "iso-8859-1", "shift_jis", "us-ascii", "euc-jp",
                                           "windows-1252", "x-bogus", "utf-16"};
  for (int i = 0; i < 10000; ++i) {
    std::string body = gen::bytes(rng, 64);
    if (gen::coin(rng, 0.2))
      body = "<?xml version=\"1.0\" encoding=\"" + gen::pick(rng, labels) + "\"?>" + body;
    const std::string& label = gen::pick(rng, labels);
    HeaderList headers = label.empty() ? HeaderList{} : content_type("text/html; charset=" + label);
    try {
      CharsetDecision d = detect_charset(headers, body);
      ASSERT_TRUE(decode_strict(body, d.charset).has_value()) << "iteration " << i;
    } catch (const Undecodable&) {
      ASSERT_FALSE(decode_strict(body, "utf-8").has_value()) << "iteration " << i;
    }
  }
}

}  // namespace
}  // namespace memharvest
