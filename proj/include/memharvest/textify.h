#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memharvest/acquisition.h"
#include "memharvest/charset.h"
#include "memharvest/html.h"
#include "memharvest/rules.h"

namespace memharvest {

enum class DiagnosticCode {
  kNullBytesRemoved,
  kCharsetFallback,
  kCharsetUndecodable,
  kFauxNoscriptTags,
  kNoscriptCorruption,
  kMetaRefreshIgnored,
  kUnsupportedMediaType,
  kPrefixStripped,
};

std::string_view to_string(DiagnosticCode code);
std::optional<DiagnosticCode> diagnostic_code_from_string(std::string_view text);

struct Diagnostic {
  DiagnosticCode code = DiagnosticCode::kNullBytesRemoved;
  std::string detail;
  std::optional<long long> count;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

// JSON array of {"code": c, "detail": d, "count": n|null}.
std::string diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);
// Throws ParseError.
std::vector<Diagnostic> diagnostics_from_json(std::string_view json);

struct ExtractionResult {
  std::string text;
  std::optional<CharsetDecision> charset;  // nullopt when the body was never decoded
  std::string archive_id;
  std::vector<Diagnostic> diagnostics;

  const Diagnostic* find(DiagnosticCode code) const;
};

struct NullScrub {
  std::string body;
  std::size_t removed = 0;
};

NullScrub strip_null_bytes(std::string_view body);

// Looks for noscript regions that leave a table-structure or div element
// open at </noscript>; an lxml-style parser then cannot close the noscript
// and the rest of the document ends up inside it. Returns a
// kNoscriptCorruption diagnostic for those, otherwise kFauxNoscriptTags when
// noscript content carries entity-encoded tags, otherwise nullopt.
std::optional<Diagnostic> detect_noscript_corruption(std::string_view body);

// Drops script and style subtrees, then every element matched by a strip
// selector of `rule` whose condition holds for raw_body.
html::Document sanitize_dom(const html::Document& document, const ArchiveRule& rule, std::string_view raw_body);

std::string extract_text(const html::Document& document);

// Collapses every run of whitespace to one newline and trims both ends.
// Invisible control and zero-width characters are removed; invalid UTF-8
// becomes U+FFFD.
std::string normalize_whitespace(std::string_view text);

bool is_whitespace_code_point(char32_t c);

struct PrefixStrip {
  std::string text;
  bool stripped = false;
};

// Removes the first matching text prefix of `rule` once, and only when the
// rule's banner marker occurs in raw_body.
PrefixStrip strip_prefixes(std::string_view text, const ArchiveRule& rule, std::string_view raw_body);

struct ExtractOptions {
  // Throw Undecodable instead of decoding leniently.
  bool strict_decode = false;
};

// Full text pipeline for a 2xx outcome. Throws NoscriptCorruption, and
// Undecodable in strict mode; std::invalid_argument for non-2xx outcomes.
ExtractionResult extract(const FetchOutcome& outcome, const RuleSet& rules, const ExtractOptions& options = {});

}  // namespace memharvest
