#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memharvest {

// Matches elements whose lowercase tag name is tag_name and whose attribute
// equals value byte for byte.
struct ElementSelector {
  std::string tag_name;
  std::string attribute;
  std::string value;

  friend bool operator==(const ElementSelector&, const ElementSelector&) = default;
};

struct RuleCondition {
  enum class Kind { kAlways, kMetaProperty };

  Kind kind = Kind::kAlways;
  std::string property;
  std::string content;

  static RuleCondition always() { return {}; }
  static RuleCondition meta_property(std::string property, std::string content) {
    return {Kind::kMetaProperty, std::move(property), std::move(content)};
  }

  // Literal containment test of the marker meta tag against the raw body,
  // e.g. '<meta property="og:site_name" content="archive.is"'.
  bool holds(std::string_view raw_body) const;
  std::string marker() const;

  friend bool operator==(const RuleCondition&, const RuleCondition&) = default;
};

struct StripRule {
  RuleCondition when;
  ElementSelector selector;

  friend bool operator==(const StripRule&, const StripRule&) = default;
};

// Everything known about one archive's boilerplate. host_patterns use
// label globs: "*" stands for one or more whole labels.
struct ArchiveRule {
  std::string archive_id;
  std::vector<std::string> host_patterns;
  std::vector<StripRule> strip;
  std::vector<std::string> text_prefixes;
  std::optional<std::string> frame_select;
  std::string notes;

  // Prefix stripping is gated on a banner marker being present in the raw
  // body: any selector value of a strip entry whose condition holds.
  bool prefix_gate_open(std::string_view raw_body) const;

  friend bool operator==(const ArchiveRule&, const ArchiveRule&) = default;
};

inline constexpr std::string_view kFallbackArchiveId = "fallback";

// Ordered, first-match-wins. Immutable once built; share freely.
class RuleSet {
 public:
  RuleSet();
  explicit RuleSet(std::vector<ArchiveRule> rules);

  const std::vector<ArchiveRule>& rules() const { return rules_; }
  const ArchiveRule& fallback() const { return fallback_; }
  const ArchiveRule* find(std::string_view archive_id) const;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;

 private:
  std::vector<ArchiveRule> rules_;
  ArchiveRule fallback_;
};

RuleSet builtin_rules();

// Parses a rule file and merges it over builtin_rules(): a rule whose
// archive_id already exists replaces the builtin in place, new ids are
// appended. Throws ParseError or DuplicateArchiveId.
RuleSet load_rules(std::string_view document);
RuleSet load_rules_file(const std::string& path);

// Rule-file JSON for every non-fallback rule in the set.
std::string serialize_rules(const RuleSet& rules);

bool host_matches(std::string_view pattern, std::string_view host);

// Throws InvalidUri when no host can be parsed from uri.
const ArchiveRule& match_archive(std::string_view uri, const RuleSet& rules);

}  // namespace memharvest
