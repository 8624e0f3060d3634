#include <gtest/gtest.h>

#include "memharvest/html.h"
#include "support/gen.h"

namespace memharvest::html {
namespace {

std::vector<Token> tokens(std::string_view input) {
  std::vector<Token> out;
  Tokenizer t(input);
  while (auto token = t.next())
    out.push_back(std::move(*token));
  return out;
}

TEST(Entities, NamedNumericAndBroken) {
  EXPECT_EQ(decode_entities("a &amp; b"), "a & b");
  EXPECT_EQ(decode_entities("&lt;table border=\"0\"&gt;"), "<table border=\"0\">");
  EXPECT_EQ(decode_entities("&#65;&#x42;&#X43;"), "ABC");
  EXPECT_EQ(decode_entities("&nbsp;"), "\xC2\xA0");
  EXPECT_EQ(decode_entities("&eacute;t&eacute;"), "\xC3\xA9t\xC3\xA9");
  EXPECT_EQ(decode_entities("&amp"), "&");  // legacy entity without semicolon
  EXPECT_EQ(decode_entities("&bogus;"), "&bogus;");
  EXPECT_EQ(decode_entities("&#0;"), "\xEF\xBF\xBD");
  EXPECT_EQ(decode_entities("&#x110000;"), "\xEF\xBF\xBD");
  EXPECT_EQ(decode_entities("a=1&ampb=2", true), "a=1&ampb=2");
}

TEST(Tokenizer, TagsAttributesAndText) {
  auto t = tokens(R"(<DIV Id="wm-ipp" class=a lang='en'>x &amp; y</div><br/>)");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0].type, Token::Type::kStartTag);
  EXPECT_EQ(t[0].name, "div");
  ASSERT_NE(t[0].attribute("id"), nullptr);
  EXPECT_EQ(*t[0].attribute("id"), "wm-ipp");
  EXPECT_EQ(*t[0].attribute("class"), "a");
  EXPECT_EQ(*t[0].attribute("lang"), "en");
  EXPECT_EQ(t[1].type, Token::Type::kText);
  EXPECT_EQ(t[1].data, "x & y");
  EXPECT_EQ(t[2].type, Token::Type::kEndTag);
  EXPECT_EQ(t[3].name, "br");
  EXPECT_TRUE(t[3].self_closing);
}

TEST(Tokenizer, ScriptIsRawText) {
  auto t = tokens("<script>if (a < b) document.write('<p>x</p>');</script><p>y");
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[1].type, Token::Type::kText);
  EXPECT_EQ(t[1].data, "if (a < b) document.write('<p>x</p>');");
  EXPECT_EQ(t[2].type, Token::Type::kEndTag);
  EXPECT_EQ(t[3].name, "p");
}

TEST(Tokenizer, CommentsAndDoctype) {
  auto t = tokens("<!DOCTYPE html><!-- a -- b --><p>");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].type, Token::Type::kDoctype);
  EXPECT_EQ(t[1].type, Token::Type::kComment);
  EXPECT_EQ(t[1].data, " a -- b ");
}

TEST(Tokenizer, StrayLessThanIsText) {
  auto t = tokens("a < b <3");
  std::string text;
  for (const auto& tok : t) {
    EXPECT_EQ(tok.type, Token::Type::kText);
    text += tok.data;
  }
  EXPECT_EQ(text, "a < b <3");
}

TEST(Document, TextContent) {
  EXPECT_EQ(Document::parse("<p>a<b>b</b>c</p>").text_content(), "abc");
  EXPECT_EQ(Document::parse("").text_content(), "");
  EXPECT_EQ(Document::parse("<title>T &amp; U</title><p>x").text_content(), "T & Ux");
}

TEST(Document, ImpliedEndTags) {
  Document d = Document::parse("<ul><li>one<li>two</ul><p>a<p>b");
  int li = 0, p = 0;
  d.walk([&](const Node& n) {
    if (n.is_element("li")) {
      ++li;
      EXPECT_EQ(n.parent()->name(), "ul");
    }
    if (n.is_element("p")) {
      ++p;
      EXPECT_FALSE(n.parent()->is_element("p"));
    }
  });
  EXPECT_EQ(li, 2);
  EXPECT_EQ(p, 2);
}

TEST(Document, StrayEndTagsIgnored) {
  Document d = Document::parse("<div>a</span>b</div></div>c");
  EXPECT_EQ(d.text_content(), "abc");
}

TEST(Document, RemoveElements) {
  Document d = Document::parse(R"(<div id="wm-ipp"><div id="wm-ipp">x</div></div><p>keep</p><script>s</script>)");
  std::size_t removed = d.remove_elements([](const Node& n) {
    const std::string* id = n.attribute("id");
    return id && *id == "wm-ipp";
  });
  EXPECT_EQ(removed, 1u);
  EXPECT_EQ(d.text_content(), "keeps");
}

TEST(Document, CopyIsDeep) {
  Document a = Document::parse("<p>x</p>");
  Document b = a;
  b.remove_elements([](const Node& n) { return n.is_element("p"); });
  EXPECT_EQ(a.text_content(), "x");
  EXPECT_EQ(b.text_content(), "");
  EXPECT_FALSE(a == b);
}

// Arbitrary soup parses, copies compare equal, and no tag markup leaks into
// the text unless it came from character references or raw-text elements.
TEST(DocumentProperty, SoupParses) {
  gen::Engine rng(7);
  for (int i = 0; i < 500; ++i) {
    std::string soup = gen::html_soup(rng, gen::size(rng, 60));
    Document doc = Document::parse(soup);
    Document copy = doc;
    ASSERT_TRUE(copy == doc) << soup;
    bool raw_text = false;
    for (const char* opener : {"&lt;", "<script>", "<style>", "<title>"})
      raw_text = raw_text || soup.find(opener) != std::string::npos;
    if (!raw_text)
      ASSERT_EQ(doc.text_content().find('<'), std::string::npos) << soup;
  }
}

}  // namespace
}  // namespace memharvest::html
