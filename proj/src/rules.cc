#include "memharvest/rules.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "memharvest/error.h"
#include "memharvest/uri.h"

namespace memharvest {
namespace {

using nlohmann::json;

std::vector<std::string> split_labels(std::string_view host) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (true) {
    auto dot = host.find('.', start);
    labels.emplace_back(host.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  return labels;
}

bool match_labels(const std::vector<std::string>& pattern, std::size_t pi,
                  const std::vector<std::string>& host, std::size_t hi) {
  if (pi == pattern.size())
    return hi == host.size();
  if (pattern[pi] == "*") {
    for (std::size_t take = 1; hi + take <= host.size(); ++take)
      if (match_labels(pattern, pi + 1, host, hi + take))
        return true;
    return false;
  }
  return hi < host.size() && pattern[pi] == host[hi] && match_labels(pattern, pi + 1, host, hi + 1);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool is_lower_ascii_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == ':';
  });
}

StripRule strip_always(std::string tag, std::string value) {
  return {RuleCondition::always(), {std::move(tag), "id", std::move(value)}};
}

const std::string kArchivedPrefix = "[ARCHIVED CONTENT] ";

// --- rule-file decoding ----------------------------------------------------

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

void check_keys(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!object.is_object())
    fail(where, "expected an object");
  for (const auto& [key, value] : object.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(where, "unknown key '" + key + "'");
  }
}

std::string get_string(const json& object, const char* key, const std::string& where, bool required = true) {
  auto it = object.find(key);
  if (it == object.end()) {
    if (required)
      fail(where, std::string("missing key '") + key + "'");
    return {};
  }
  if (!it->is_string())
    fail(where + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<std::string> get_string_array(const json& object, const char* key, const std::string& where,
                                          bool required) {
  auto it = object.find(key);
  if (it == object.end()) {
    if (required)
      fail(where, std::string("missing key '") + key + "'");
    return {};
  }
  if (!it->is_array())
    fail(where + "." + key, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& item = (*it)[i];
    if (!item.is_string())
      fail(where + "." + key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(item.get<std::string>());
  }
  return out;
}

RuleCondition decode_condition(const json& when, const std::string& where) {
  check_keys(when, where, {"kind", "property", "content"});
  std::string kind = get_string(when, "kind", where);
  if (kind == "always") {
    if (when.contains("property") || when.contains("content"))
      fail(where, "kind 'always' takes no property/content");
    return RuleCondition::always();
  }
  if (kind == "meta-property") {
    auto property = get_string(when, "property", where);
    auto content = get_string(when, "content", where);
    if (property.empty() || content.empty())
      fail(where, "meta-property requires non-empty property and content");
    return RuleCondition::meta_property(std::move(property), std::move(content));
  }
  fail(where + ".kind", "unknown condition kind '" + kind + "'");
}

StripRule decode_strip(const json& item, const std::string& where) {
  check_keys(item, where, {"when", "tag", "attr", "value"});
  StripRule rule;
  if (auto it = item.find("when"); it != item.end())
    rule.when = decode_condition(*it, where + ".when");
  rule.selector.tag_name = get_string(item, "tag", where);
  rule.selector.attribute = get_string(item, "attr", where);
  rule.selector.value = get_string(item, "value", where);
  if (!is_lower_ascii_name(rule.selector.tag_name))
    fail(where + ".tag", "must be a non-empty lowercase ASCII element name");
  if (!is_lower_ascii_name(rule.selector.attribute))
    fail(where + ".attr", "must be a non-empty lowercase ASCII attribute name");
  return rule;
}

ArchiveRule decode_rule(const json& object, const std::string& where) {
  check_keys(object, where, {"archive_id", "hosts", "strip", "prefixes", "frame_select", "notes"});
  ArchiveRule rule;
  rule.archive_id = get_string(object, "archive_id", where);
  if (rule.archive_id.empty())
    fail(where + ".archive_id", "must be non-empty");
  if (rule.archive_id == kFallbackArchiveId)
    fail(where + ".archive_id", "'fallback' is reserved");
  for (auto& host : get_string_array(object, "hosts", where, true)) {
    if (host.empty())
      fail(where + ".hosts", "host patterns must be non-empty");
    rule.host_patterns.push_back(ascii_lower(host));
  }
  if (auto it = object.find("strip"); it != object.end()) {
    if (!it->is_array())
      fail(where + ".strip", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      rule.strip.push_back(decode_strip((*it)[i], where + ".strip[" + std::to_string(i) + "]"));
  }
  rule.text_prefixes = get_string_array(object, "prefixes", where, false);
  for (const auto& prefix : rule.text_prefixes)
    if (prefix.empty())
      fail(where + ".prefixes", "prefixes must be non-empty");
  if (auto it = object.find("frame_select"); it != object.end() && !it->is_null()) {
    if (!it->is_string())
      fail(where + ".frame_select", "expected a string or null");
    rule.frame_select = it->get<std::string>();
  }
  rule.notes = get_string(object, "notes", where, false);
  return rule;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json encode_rule(const ArchiveRule& rule) {
  json strip = json::array();
  for (const auto& s : rule.strip) {
    json when = {{"kind", s.when.kind == RuleCondition::Kind::kAlways ? "always" : "meta-property"}};
    if (s.when.kind == RuleCondition::Kind::kMetaProperty) {
      when["property"] = s.when.property;
      when["content"] = s.when.content;
    }
    strip.push_back({{"when", when}, {"tag", s.selector.tag_name}, {"attr", s.selector.attribute},
                     {"value", s.selector.value}});
  }
  json out = {{"archive_id", rule.archive_id},
              {"hosts", rule.host_patterns},
              {"strip", strip},
              {"prefixes", rule.text_prefixes},
              {"frame_select", rule.frame_select ? json(*rule.frame_select) : json(nullptr)}};
  if (!rule.notes.empty())
    out["notes"] = rule.notes;
  return out;
}

}  // namespace

std::string RuleCondition::marker() const {
  return "<meta property=\"" + property + "\" content=\"" + content + "\"";
}

bool RuleCondition::holds(std::string_view raw_body) const {
  if (kind == Kind::kAlways)
    return true;
  return raw_body.find(marker()) != std::string_view::npos;
}

bool ArchiveRule::prefix_gate_open(std::string_view raw_body) const {
  return std::any_of(strip.begin(), strip.end(), [&](const StripRule& s) {
    return s.when.holds(raw_body) && raw_body.find(s.selector.value) != std::string_view::npos;
  });
}

RuleSet::RuleSet() : RuleSet(std::vector<ArchiveRule>{}) {}

RuleSet::RuleSet(std::vector<ArchiveRule> rules) : rules_(std::move(rules)) {
  fallback_.archive_id = std::string(kFallbackArchiveId);
  fallback_.notes =
      "Archives without a dedicated rule: removing scripts and stylesheets is "
      "expected to remove their additions.";
  std::set<std::string> seen;
  for (const auto& rule : rules_)
    if (!seen.insert(rule.archive_id).second)
      throw DuplicateArchiveId("duplicate archive_id '" + rule.archive_id + "'");
}

const ArchiveRule* RuleSet::find(std::string_view archive_id) const {
  if (archive_id == kFallbackArchiveId)
    return &fallback_;
  for (const auto& rule : rules_)
    if (rule.archive_id == archive_id)
      return &rule;
  return nullptr;
}

RuleSet builtin_rules() {
  std::vector<ArchiveRule> rules;

  // The UK archive markup has been seen with both capitalisations of the
  // banner id, so both are registered.
  rules.push_back({"uk-national-archives",
                   {"webarchive.nationalarchives.gov.uk"},
                   {strip_always("div", "webArchiveInfobox"), strip_always("div", "webarchiveInfobox")},
                   {kArchivedPrefix},
                   std::nullopt,
                   "UK National Archives banner and title prefix"});

  rules.push_back({"proni",
                   {"webarchive.proni.gov.uk"},
                   {strip_always("div", "PRONIBANNER")},
                   {kArchivedPrefix},
                   std::nullopt,
                   "Public Record Office of Northern Ireland banner and sidebar"});

  // Pages may legitimately use id="HEADER", so stripping is gated on the
  // archive's own og:site_name marker.
  auto archive_is = RuleCondition::meta_property("og:site_name", "archive.is");
  rules.push_back({"archive-is",
                   {"archive.is", "archive.today", "archive.ph", "archive.li", "archive.vn", "archive.fo",
                    "archive.md", "www.archive.is"},
                   {{archive_is, {"div", "id", "HEADER"}}, {archive_is, {"table", "id", "hashtags"}}},
                   {},
                   std::nullopt,
                   "Archive.is header and hashtag sidebar; HTML is served minified"});

  rules.push_back({"webcite",
                   {"webcitation.org", "www.webcitation.org"},
                   {},
                   {},
                   "main",
                   "Serves every memento through a frameset; content is in the 'main' frame"});

  rules.push_back({"wayback",
                   {"web.archive.org", "wayback.archive.org", "*.archive.org", "wayback.*", "webarchive.*",
                    "*.archive-it.org", "arquivo.pt", "webarchive.loc.gov"},
                   {strip_always("div", "wm-ipp")},
                   {},
                   std::nullopt,
                   "Wayback replay toolbar"});

  return RuleSet(std::move(rules));
}

RuleSet load_rules(std::string_view document) {
  RuleSet builtins = builtin_rules();
  bool blank = std::all_of(document.begin(), document.end(),
                           [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
  if (blank)
    return builtins;

  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    auto [line, column] = line_column(document, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("malformed rule file", line, column);
  }

  check_keys(root, "document", {"rules"});
  auto it = root.find("rules");
  if (it == root.end() || !it->is_array())
    fail("document", "expected a 'rules' array");

  std::vector<ArchiveRule> parsed;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < it->size(); ++i) {
    ArchiveRule rule = decode_rule((*it)[i], "rules[" + std::to_string(i) + "]");
    if (!ids.insert(rule.archive_id).second)
      throw DuplicateArchiveId("archive_id '" + rule.archive_id + "' defined twice in the same document");
    parsed.push_back(std::move(rule));
  }

  std::vector<ArchiveRule> merged = builtins.rules();
  for (auto& rule : parsed) {
    auto existing = std::find_if(merged.begin(), merged.end(),
                                 [&](const ArchiveRule& r) { return r.archive_id == rule.archive_id; });
    if (existing != merged.end())
      *existing = std::move(rule);
    else
      merged.push_back(std::move(rule));
  }
  return RuleSet(std::move(merged));
}

RuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open rule file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_rules(buffer.str());
}

std::string serialize_rules(const RuleSet& rules) {
  json array = json::array();
  for (const auto& rule : rules.rules())
    array.push_back(encode_rule(rule));
  return json{{"rules", array}}.dump(2) + "\n";
}

bool host_matches(std::string_view pattern, std::string_view host) {
  if (pattern.empty() || host.empty())
    return false;
  return match_labels(split_labels(ascii_lower(pattern)), 0, split_labels(ascii_lower(host)), 0);
}

const ArchiveRule& match_archive(std::string_view uri, const RuleSet& rules) {
  std::string host = parse_absolute_uri(uri).host();
  for (const auto& rule : rules.rules())
    for (const auto& pattern : rule.host_patterns)
      if (host_matches(pattern, host))
        return rule;
  return rules.fallback();
}

}  // namespace memharvest
