#include <gtest/gtest.h>

#include "memharvest/error.h"
#include "memharvest/uri.h"

namespace memharvest {
namespace {

TEST(UriParse, SplitsComponents) {
  Uri u = parse_uri_reference("http://User@Example.COM:8080/a/b?q=1#frag");
  EXPECT_EQ(u.scheme, "http");
  EXPECT_EQ(u.authority, "User@Example.COM:8080");
  EXPECT_EQ(u.path, "/a/b");
  EXPECT_EQ(u.query, "q=1");
  EXPECT_EQ(u.fragment, "frag");
  EXPECT_EQ(u.host(), "example.com");
  EXPECT_EQ(u.port(), 8080);
  EXPECT_EQ(u.host_and_port(), "example.com:8080");
}

TEST(UriParse, EmptyAndAbsentComponentsDiffer) {
  Uri with_empty = parse_uri_reference("http://h/p?#");
  EXPECT_EQ(with_empty.query, "");
  EXPECT_EQ(with_empty.fragment, "");
  EXPECT_EQ(with_empty.str(), "http://h/p?#");

  Uri without = parse_uri_reference("http://h/p");
  EXPECT_FALSE(without.query);
  EXPECT_FALSE(without.fragment);
  EXPECT_EQ(without.str(), "http://h/p");
}

TEST(UriParse, DefaultPorts) {
  EXPECT_EQ(parse_absolute_uri("http://a.org/").host_and_port(), "a.org:80");
  EXPECT_EQ(parse_absolute_uri("https://a.org/").host_and_port(), "a.org:443");
  EXPECT_EQ(parse_absolute_uri("http://[::1]:81/").host(), "::1");
}

TEST(UriParse, AbsoluteRequiresHttpAndHost) {
  EXPECT_NO_THROW(parse_absolute_uri("http://web.archive.org/web/2008/http://x.org/"));
  EXPECT_THROW(parse_absolute_uri("/relative"), InvalidUri);
  EXPECT_THROW(parse_absolute_uri("ftp://a.org/"), InvalidUri);
  EXPECT_THROW(parse_absolute_uri("http:///nohost"), InvalidUri);
  EXPECT_THROW(parse_absolute_uri(""), InvalidUri);
  EXPECT_TRUE(is_absolute_http_uri("HTTPS://a.org"));
  EXPECT_FALSE(is_absolute_http_uri("mailto:x@y"));
}

TEST(UriResolve, Rfc3986NormalExamples) {
  const std::string base = "http://a/b/c/d;p?q";
  const std::pair<const char*, const char*> cases[] = {
      {"g:h", "g:h"},
      {"g", "http://a/b/c/g"},
      {"./g", "http://a/b/c/g"},
      {"g/", "http://a/b/c/g/"},
      {"/g", "http://a/g"},
      {"//g", "http://g"},
      {"?y", "http://a/b/c/d;p?y"},
      {"g?y", "http://a/b/c/g?y"},
      {"#s", "http://a/b/c/d;p?q#s"},
      {"g#s", "http://a/b/c/g#s"},
      {"g?y#s", "http://a/b/c/g?y#s"},
      {";x", "http://a/b/c/;x"},
      {"g;x", "http://a/b/c/g;x"},
      {"", "http://a/b/c/d;p?q"},
      {".", "http://a/b/c/"},
      {"./", "http://a/b/c/"},
      {"..", "http://a/b/"},
      {"../", "http://a/b/"},
      {"../g", "http://a/b/g"},
      {"../..", "http://a/"},
      {"../../", "http://a/"},
      {"../../g", "http://a/g"},
  };
  for (const auto& [ref, expected] : cases)
    EXPECT_EQ(resolve_reference(base, ref), expected) << "reference " << ref;
}

TEST(UriResolve, Rfc3986AbnormalExamples) {
  const std::string base = "http://a/b/c/d;p?q";
  EXPECT_EQ(resolve_reference(base, "../../../g"), "http://a/g");
  EXPECT_EQ(resolve_reference(base, "/./g"), "http://a/g");
  EXPECT_EQ(resolve_reference(base, "/../g"), "http://a/g");
  EXPECT_EQ(resolve_reference(base, "g."), "http://a/b/c/g.");
  EXPECT_EQ(resolve_reference(base, "..g"), "http://a/b/c/..g");
  EXPECT_EQ(resolve_reference(base, "./g/."), "http://a/b/c/g/");
  EXPECT_EQ(resolve_reference(base, "g;x=1/../y"), "http://a/b/c/y");
  EXPECT_EQ(resolve_reference(base, "http:g"), "http:g");  // strict parser
}

TEST(UriResolve, WaybackStyleEmbeddedUri) {
  EXPECT_EQ(resolve_reference("http://web.archive.org/web/20050303000000/http://www.example.gov/pr/05-38",
                              "/web/20050303000000/http://www.example.gov/news/05-38"),
            "http://web.archive.org/web/20050303000000/http://www.example.gov/news/05-38");
}

TEST(UriDotSegments, Examples) {
  EXPECT_EQ(remove_dot_segments("/a/b/c/./../../g"), "/a/g");
  EXPECT_EQ(remove_dot_segments("mid/content=5/../6"), "mid/6");
  EXPECT_EQ(remove_dot_segments(""), "");
}

}  // namespace
}  // namespace memharvest
