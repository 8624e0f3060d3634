#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "memharvest/headers.h"

namespace memharvest {

enum class CharsetSource { kContentTypeHeader, kXmlDeclaration, kDefaultUtf8, kFallbackUtf8 };

std::string_view to_string(CharsetSource source);
std::optional<CharsetSource> charset_source_from_string(std::string_view text);

struct CharsetDecision {
  std::string charset;  // lowercase label
  CharsetSource source = CharsetSource::kDefaultUtf8;

  friend bool operator==(const CharsetDecision&, const CharsetDecision&) = default;
};

struct ContentType {
  std::string media_type;              // lowercase, trimmed
  std::optional<std::string> charset;  // unquoted, lowercase

  friend bool operator==(const ContentType&, const ContentType&) = default;
};

ContentType parse_content_type(std::string_view header_value);

bool is_html_media_type(std::string_view media_type);

// Encoding named by a leading <?xml ...?> declaration, lowercased.
std::optional<std::string> xml_declared_encoding(std::string_view body);

// True when iconv knows the label (after web alias mapping).
bool is_known_charset(std::string_view label);

// Decodes to UTF-8. nullopt on any invalid or truncated sequence, or when the
// label is unknown.
std::optional<std::string> decode_strict(std::string_view bytes, std::string_view label);

// Decodes to UTF-8 replacing each undecodable byte with U+FFFD. Unknown labels
// decode as UTF-8.
std::string decode_lenient(std::string_view bytes, std::string_view label);

// Charset selection for an HTML body:
//   1. the Content-Type charset parameter if present, else UTF-8;
//   2. an XML declaration's encoding overrides it;
//   3. the saved charset is kept if the body decodes with it;
//   4. otherwise UTF-8 is tried; if that fails too, Undecodable is thrown.
CharsetDecision detect_charset(const HeaderList& headers, std::string_view body);

struct DecodedBody {
  CharsetDecision decision;
  std::string text;          // UTF-8
  bool undecodable = false;  // true when text came from the lenient decoder
};

// detect_charset plus the decoded text. With strict=false an undecodable
// body is decoded leniently as UTF-8 instead of throwing.
DecodedBody decode_body(const HeaderList& headers, std::string_view body, bool strict);

}  // namespace memharvest
