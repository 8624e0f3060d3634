#include <gtest/gtest.h>

#include "memharvest/error.h"
#include "memharvest/rules.h"
#include "support/gen.h"

namespace memharvest {
namespace {

TEST(BuiltinRules, KnownArchives) {
  RuleSet rules = builtin_rules();
  const ArchiveRule* wayback = rules.find("wayback");
  ASSERT_NE(wayback, nullptr);
  EXPECT_EQ(wayback->strip.at(0).selector, (ElementSelector{"div", "id", "wm-ipp"}));

  const ArchiveRule* uk = rules.find("uk-national-archives");
  ASSERT_NE(uk, nullptr);
  EXPECT_EQ(uk->text_prefixes, std::vector<std::string>{"[ARCHIVED CONTENT] "});
  EXPECT_EQ(uk->text_prefixes[0].size(), 19u);

  const ArchiveRule* proni = rules.find("proni");
  ASSERT_NE(proni, nullptr);
  EXPECT_EQ(proni->strip.at(0).selector.value, "PRONIBANNER");

  const ArchiveRule* archive_is = rules.find("archive-is");
  ASSERT_NE(archive_is, nullptr);
  ASSERT_EQ(archive_is->strip.size(), 2u);
  for (const auto& s : archive_is->strip) {
    EXPECT_EQ(s.when.kind, RuleCondition::Kind::kMetaProperty);
    EXPECT_EQ(s.when.marker(), "<meta property=\"og:site_name\" content=\"archive.is\"");
  }
  EXPECT_EQ(archive_is->strip[0].selector, (ElementSelector{"div", "id", "HEADER"}));
  EXPECT_EQ(archive_is->strip[1].selector, (ElementSelector{"table", "id", "hashtags"}));

  const ArchiveRule* webcite = rules.find("webcite");
  ASSERT_NE(webcite, nullptr);
  EXPECT_EQ(webcite->frame_select, "main");
  EXPECT_TRUE(webcite->strip.empty());

  EXPECT_EQ(rules.fallback().archive_id, "fallback");
  EXPECT_TRUE(rules.fallback().strip.empty());
  EXPECT_TRUE(rules.fallback().text_prefixes.empty());
}

TEST(MatchArchive, ByHost) {
  RuleSet rules = builtin_rules();
  EXPECT_EQ(match_archive("http://web.archive.org/web/2008/http://x.org/", rules).archive_id, "wayback");
  EXPECT_EQ(match_archive("http://wayback.archive-it.org/1/2008/http://x.org/", rules).archive_id, "wayback");
  EXPECT_EQ(match_archive("http://webarchive.nationalarchives.gov.uk/2012/http://x/", rules).archive_id,
            "uk-national-archives");
  EXPECT_EQ(match_archive("http://WEBARCHIVE.PRONI.GOV.UK/2011/http://x/", rules).archive_id, "proni");
  EXPECT_EQ(match_archive("http://archive.is/abc", rules).archive_id, "archive-is");
  EXPECT_EQ(match_archive("http://www.webcitation.org/6BToD7SUd", rules).archive_id, "webcite");
  EXPECT_EQ(match_archive("http://www.example.com/", rules).archive_id, "fallback");
  EXPECT_THROW(match_archive("not a uri", rules), InvalidUri);
}

TEST(HostMatches, LabelGlobs) {
  EXPECT_TRUE(host_matches("web.archive.org", "web.archive.org"));
  EXPECT_TRUE(host_matches("*.archive.org", "web.archive.org"));
  EXPECT_TRUE(host_matches("*.archive.org", "a.b.archive.org"));
  EXPECT_FALSE(host_matches("*.archive.org", "archive.org"));
  EXPECT_TRUE(host_matches("wayback.*", "wayback.vefsafn.is"));
  EXPECT_FALSE(host_matches("wayback.*", "wayback"));
  EXPECT_FALSE(host_matches("web.archive.org", "xweb.archive.org"));
  EXPECT_TRUE(host_matches("Web.Archive.org", "web.archive.ORG"));
}

TEST(LoadRules, BlankDocumentGivesBuiltins) {
  EXPECT_EQ(load_rules(""), builtin_rules());
  EXPECT_EQ(load_rules(" \n\t"), builtin_rules());
}

TEST(LoadRules, OverrideReplacesInPlaceAndNewIdsAppend) {
  RuleSet merged = load_rules(R"({"rules": [
      {"archive_id": "proni", "hosts": ["proni.example"], "strip": [], "prefixes": []},
      {"archive_id": "perma", "hosts": ["perma.cc"], "strip": [{"tag": "div", "attr": "class", "value": "banner"}],
       "notes": "test"}
  ]})");
  RuleSet builtins = builtin_rules();
  ASSERT_EQ(merged.rules().size(), builtins.rules().size() + 1);
  for (std::size_t i = 0; i < builtins.rules().size(); ++i)
    EXPECT_EQ(merged.rules()[i].archive_id, builtins.rules()[i].archive_id);
  EXPECT_EQ(merged.find("proni")->host_patterns, std::vector<std::string>{"proni.example"});
  EXPECT_EQ(merged.rules().back().archive_id, "perma");
  EXPECT_EQ(merged.rules().back().strip.at(0).when, RuleCondition::always());
  EXPECT_EQ(match_archive("http://perma.cc/X", merged).archive_id, "perma");
}

TEST(LoadRules, Errors) {
  try {
    load_rules("{\n  \"rules\": [\n    {,}\n]}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_THROW(load_rules(R"({"rules": {}})"), ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [], "extra": 1})"), ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [{"archive_id": "x"}]})"), ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [{"archive_id": "x", "hosts": ["a"], "prefixes": [""]}]})"), ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [{"archive_id": "fallback", "hosts": ["a"]}]})"), ParseError);
  EXPECT_THROW(
      load_rules(R"({"rules": [{"archive_id": "x", "hosts": ["a"], "strip": [{"tag": "DIV", "attr": "id", "value": "v"}]}]})"),
      ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [{"archive_id": "x", "hosts": ["a"],
      "strip": [{"when": {"kind": "meta-property", "property": "", "content": "c"}, "tag": "div", "attr": "id", "value": "v"}]}]})"),
               ParseError);
  EXPECT_THROW(load_rules(R"({"rules": [{"archive_id": "x", "hosts": ["a"]}, {"archive_id": "x", "hosts": ["b"]}]})"),
               DuplicateArchiveId);
  EXPECT_THROW(load_rules_file("/nonexistent/rules.json"), Error);
}

TEST(RuleCondition, LiteralContainment) {
  auto c = RuleCondition::meta_property("og:site_name", "archive.is");
  EXPECT_TRUE(c.holds(R"(<head><meta property="og:site_name" content="archive.is"/></head>)"));
  EXPECT_FALSE(c.holds(R"(<meta content="archive.is" property="og:site_name">)"));
  EXPECT_FALSE(c.holds(R"(<META PROPERTY="og:site_name" CONTENT="archive.is">)"));
  EXPECT_TRUE(RuleCondition::always().holds(""));
}

TEST(ArchiveRule, PrefixGate) {
  RuleSet rules = builtin_rules();
  EXPECT_TRUE(rules.find("proni")->prefix_gate_open(R"(<div id="PRONIBANNER">)"));
  EXPECT_FALSE(rules.find("proni")->prefix_gate_open("<div>no banner</div>"));
  EXPECT_TRUE(rules.find("uk-national-archives")->prefix_gate_open(R"(<div id="webArchiveInfobox">)"));
  EXPECT_FALSE(rules.fallback().prefix_gate_open(R"(<div id="PRONIBANNER">)"));
}

// Rule sets built from random parts survive serialize -> load unchanged.
TEST(RulesProperty, SerializeRoundTrip) {
  gen::Engine rng(20161017);
  const std::vector<std::string> tags = {"div", "table", "span", "section", "iframe"};
  const std::vector<std::string> attrs = {"id", "class", "data-x", "role"};
  for (int iteration = 0; iteration < 300; ++iteration) {
    std::vector<ArchiveRule> extra;
    std::size_t n = 1 + gen::size(rng, 4);
    for (std::size_t i = 0; i < n; ++i) {
      ArchiveRule rule;
      rule.archive_id = "r" + std::to_string(i) + "-" + gen::word(rng);
      for (std::size_t h = 0, hn = 1 + gen::size(rng, 2); h < hn; ++h)
        rule.host_patterns.push_back((gen::coin(rng) ? "*." : "") + gen::word(rng) + ".org");
      for (std::size_t s = 0, sn = gen::size(rng, 3); s < sn; ++s) {
        StripRule strip;
        if (gen::coin(rng))
          strip.when = RuleCondition::meta_property("og:" + gen::word(rng), gen::word(rng) + ".is");
        strip.selector = {gen::pick(rng, tags), gen::pick(rng, attrs), gen::word(rng) + "\"\\\xC3\xA9"};
        rule.strip.push_back(strip);
      }
      for (std::size_t p = 0, pn = gen::size(rng, 2); p < pn; ++p)
        rule.text_prefixes.push_back("[" + gen::word(rng) + "] ");
      if (gen::coin(rng))
        rule.frame_select = gen::word(rng);
      if (gen::coin(rng))
        rule.notes = gen::word(rng) + " " + gen::word(rng);
      extra.push_back(std::move(rule));
    }
    std::vector<ArchiveRule> all = builtin_rules().rules();
    all.insert(all.end(), extra.begin(), extra.end());
    RuleSet original(all);
    RuleSet loaded = load_rules(serialize_rules(original));
    ASSERT_EQ(loaded, original) << serialize_rules(original);
  }
}

}  // namespace
}  // namespace memharvest
