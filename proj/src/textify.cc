#include "memharvest/textify.h"

#include <array>
#include <regex>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "memharvest/error.h"

namespace memharvest {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array kCodes = {
    std::pair{DiagnosticCode::kNullBytesRemoved, std::string_view("null-bytes-removed")},
    std::pair{DiagnosticCode::kCharsetFallback, std::string_view("charset-fallback")},
    std::pair{DiagnosticCode::kCharsetUndecodable, std::string_view("charset-undecodable")},
    std::pair{DiagnosticCode::kFauxNoscriptTags, std::string_view("faux-noscript-tags")},
    std::pair{DiagnosticCode::kNoscriptCorruption, std::string_view("noscript-corruption")},
    std::pair{DiagnosticCode::kMetaRefreshIgnored, std::string_view("meta-refresh-ignored")},
    std::pair{DiagnosticCode::kUnsupportedMediaType, std::string_view("unsupported-media-type")},
    std::pair{DiagnosticCode::kPrefixStripped, std::string_view("prefix-stripped")},
};

// Elements whose open tag keeps an lxml-style parser from honouring a
// following </noscript>: their end priority is above the default.
bool blocks_noscript_end(std::string_view name) {
  return name == "div" || name == "table" || name == "thead" || name == "tbody" || name == "tfoot" ||
         name == "tr" || name == "td" || name == "th";
}

// Decodes one UTF-8 sequence at s[i]. Returns the code point and its length,
// or U+FFFD with length 1 for an invalid byte.
std::pair<char32_t, std::size_t> next_code_point(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char lead = byte(i);
  if (lead < 0x80)
    return {lead, 1};
  std::size_t length;
  char32_t cp;
  char32_t min;
  if ((lead & 0xE0) == 0xC0) {
    length = 2, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    return {0xFFFD, 1};
  }
  if (i + length > s.size())
    return {0xFFFD, 1};
  for (std::size_t k = 1; k < length; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80)
      return {0xFFFD, 1};
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
    return {0xFFFD, 1};
  return {cp, length};
}

bool is_invisible(char32_t c) {
  if (c < 0x20 || (c >= 0x7F && c <= 0x9F))
    return true;  // controls that are not whitespace (checked first by the caller)
  return c == 0xFEFF || c == 0x200B || c == 0x2060;
}

}  // namespace

std::string_view to_string(DiagnosticCode code) {
  for (const auto& [value, name] : kCodes)
    if (value == code)
      return name;
  return "null-bytes-removed";
}

std::optional<DiagnosticCode> diagnostic_code_from_string(std::string_view text) {
  for (const auto& [value, name] : kCodes)
    if (name == text)
      return value;
  return std::nullopt;
}

std::string diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
  Json array = Json::array();
  for (const auto& d : diagnostics) {
    Json item;
    item["code"] = to_string(d.code);
    item["detail"] = d.detail;
    item["count"] = d.count ? Json(*d.count) : Json(nullptr);
    array.push_back(std::move(item));
  }
  return array.dump(2, ' ', false, Json::error_handler_t::replace);
}

std::vector<Diagnostic> diagnostics_from_json(std::string_view json) {
  Json array;
  try {
    array = Json::parse(json);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("diagnostics: ") + e.what());
  }
  if (!array.is_array())
    throw ParseError("diagnostics: expected an array");
  std::vector<Diagnostic> out;
  for (const auto& item : array) {
    if (!item.is_object() || !item.contains("code") || !item["code"].is_string())
      throw ParseError("diagnostics: entry without a code");
    auto code = diagnostic_code_from_string(item["code"].get<std::string>());
    if (!code)
      throw ParseError("diagnostics: unknown code '" + item["code"].get<std::string>() + "'");
    Diagnostic d{*code, {}, std::nullopt};
    if (item.contains("detail") && item["detail"].is_string())
      d.detail = item["detail"].get<std::string>();
    if (item.contains("count") && item["count"].is_number_integer())
      d.count = item["count"].get<long long>();
    out.push_back(std::move(d));
  }
  return out;
}

const Diagnostic* ExtractionResult::find(DiagnosticCode code) const {
  for (const auto& d : diagnostics)
    if (d.code == code)
      return &d;
  return nullptr;
}

NullScrub strip_null_bytes(std::string_view body) {
  NullScrub scrub;
  scrub.body.reserve(body.size());
  for (char c : body) {
    if (c == '\0')
      ++scrub.removed;
    else
      scrub.body.push_back(c);
  }
  return scrub;
}

std::optional<Diagnostic> detect_noscript_corruption(std::string_view body) {
  static const std::regex kFauxTag(R"(&lt;/?[A-Za-z][^&]*?&gt;)", std::regex::icase);

  html::Tokenizer tokenizer(body);
  bool inside = false;
  std::size_t region_start = 0;
  std::vector<std::string> open;
  long long faux = 0;
  std::string corrupt_detail;

  auto close_region = [&](std::size_t end) {
    std::string region(body.substr(region_start, end - region_start));
    faux += std::distance(std::sregex_iterator(region.begin(), region.end(), kFauxTag), std::sregex_iterator());
    for (const auto& name : open) {
      if (blocks_noscript_end(name)) {
        if (corrupt_detail.empty())
          corrupt_detail = "<" + name + "> opened inside <noscript> at byte " + std::to_string(region_start) +
                           " is never closed there";
        break;
      }
    }
    open.clear();
    inside = false;
  };

  while (auto token = tokenizer.next()) {
    if (!inside) {
      if (token->type == html::Token::Type::kStartTag && token->name == "noscript" && !token->self_closing) {
        inside = true;
        region_start = token->offset;
      }
      continue;
    }
    if (token->type == html::Token::Type::kEndTag && token->name == "noscript") {
      close_region(token->offset);
      continue;
    }
    if (token->type == html::Token::Type::kStartTag && !token->self_closing && !html::is_void_element(token->name)) {
      open.push_back(token->name);
    } else if (token->type == html::Token::Type::kEndTag) {
      for (auto it = open.rbegin(); it != open.rend(); ++it) {
        if (*it == token->name) {
          open.erase(std::prev(it.base()), open.end());
          break;
        }
      }
    }
  }
  if (inside)
    close_region(body.size());

  if (!corrupt_detail.empty())
    return Diagnostic{DiagnosticCode::kNoscriptCorruption, corrupt_detail, std::nullopt};
  if (faux > 0)
    return Diagnostic{DiagnosticCode::kFauxNoscriptTags, "entity-encoded tags inside <noscript>", faux};
  return std::nullopt;
}

html::Document sanitize_dom(const html::Document& document, const ArchiveRule& rule, std::string_view raw_body) {
  html::Document out = document;
  out.remove_elements([](const html::Node& node) { return node.is_element("script") || node.is_element("style"); });
  for (const auto& entry : rule.strip) {
    if (!entry.when.holds(raw_body))
      continue;
    const ElementSelector& selector = entry.selector;
    out.remove_elements([&](const html::Node& node) {
      if (!node.is_element(selector.tag_name))
        return false;
      const std::string* value = node.attribute(selector.attribute);
      return value && *value == selector.value;
    });
  }
  return out;
}

std::string extract_text(const html::Document& document) {
  return document.text_content();
}

bool is_whitespace_code_point(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_break = false;
  for (std::size_t i = 0; i < text.size();) {
    auto [cp, length] = next_code_point(text, i);
    i += length;
    if (is_whitespace_code_point(cp)) {
      pending_break = !out.empty();
      continue;
    }
    if (is_invisible(cp))
      continue;
    if (pending_break) {
      out.push_back('\n');
      pending_break = false;
    }
    html::append_utf8(out, cp);
  }
  return out;
}

PrefixStrip strip_prefixes(std::string_view text, const ArchiveRule& rule, std::string_view raw_body) {
  if (rule.text_prefixes.empty() || !rule.prefix_gate_open(raw_body))
    return {std::string(text), false};
  for (const auto& prefix : rule.text_prefixes)
    if (text.starts_with(prefix))
      return {std::string(text.substr(prefix.size())), true};
  return {std::string(text), false};
}

ExtractionResult extract(const FetchOutcome& outcome, const RuleSet& rules, const ExtractOptions& options) {
  if (outcome.status < 200 || outcome.status > 299)
    throw std::invalid_argument("extract: outcome status " + std::to_string(outcome.status) + " is not 2xx");

  ExtractionResult result;
  const std::string& uri = outcome.final_uri.empty() ? outcome.request_uri : outcome.final_uri;
  const ArchiveRule& rule = match_archive(uri, rules);
  result.archive_id = rule.archive_id;

  auto content_type = outcome.content_type();
  if (!content_type || !is_html_media_type(parse_content_type(*content_type).media_type)) {
    result.diagnostics.push_back({DiagnosticCode::kUnsupportedMediaType,
                                  content_type ? "media type " + parse_content_type(*content_type).media_type
                                               : "no Content-Type header",
                                  std::nullopt});
    return result;
  }

  NullScrub scrub = strip_null_bytes(outcome.body);
  if (scrub.removed > 0)
    result.diagnostics.push_back({DiagnosticCode::kNullBytesRemoved, "NUL bytes deleted before parsing",
                                  static_cast<long long>(scrub.removed)});

  DecodedBody decoded = decode_body(outcome.headers, scrub.body, options.strict_decode);
  result.charset = decoded.decision;
  if (decoded.undecodable) {
    result.diagnostics.push_back({DiagnosticCode::kCharsetUndecodable,
                                  "decoded leniently as utf-8 with replacement characters", std::nullopt});
  } else if (decoded.decision.source == CharsetSource::kFallbackUtf8) {
    result.diagnostics.push_back({DiagnosticCode::kCharsetFallback, "declared charset failed; decoded as utf-8",
                                  std::nullopt});
  }

  if (auto noscript = detect_noscript_corruption(decoded.text)) {
    if (noscript->code == DiagnosticCode::kNoscriptCorruption)
      throw NoscriptCorruption(uri + ": " + noscript->detail);
    result.diagnostics.push_back(std::move(*noscript));
  }

  std::string refresh_problem;
  if (detect_meta_refresh(decoded.text, uri, &refresh_problem) || !refresh_problem.empty())
    result.diagnostics.push_back({DiagnosticCode::kMetaRefreshIgnored,
                                  refresh_problem.empty() ? "meta refresh in final document" : refresh_problem,
                                  std::nullopt});

  html::Document document = sanitize_dom(html::Document::parse(decoded.text), rule, decoded.text);
  PrefixStrip prefixed = strip_prefixes(extract_text(document), rule, decoded.text);
  if (prefixed.stripped)
    result.diagnostics.push_back({DiagnosticCode::kPrefixStripped, "archive text prefix removed", std::nullopt});
  result.text = normalize_whitespace(prefixed.text);
  return result;
}

}  // namespace memharvest
