#include "memharvest/charset.h"

#include <iconv.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <regex>
#include <utility>

#include "memharvest/error.h"

namespace memharvest {
namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_ws(s.front()))
    s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back()))
    s.remove_suffix(1);
  return s;
}

// Web labels that glibc iconv does not spell the same way.
constexpr std::array<std::pair<std::string_view, std::string_view>, 16> kAliases = {{
    {"x-sjis", "SHIFT_JIS"},
    {"sjis", "SHIFT_JIS"},
    {"ms_kanji", "SHIFT_JIS"},
    {"csshiftjis", "SHIFT_JIS"},
    {"windows-31j", "CP932"},
    {"x-euc-jp", "EUC-JP"},
    {"ks_c_5601-1987", "CP949"},
    {"x-gbk", "GBK"},
    {"x-mac-roman", "MACINTOSH"},
    {"unicode-1-1-utf-8", "UTF-8"},
    {"utf8", "UTF-8"},
    {"ascii", "US-ASCII"},
    {"windows-874", "CP874"},
    {"x-cp1252", "CP1252"},
    {"x-cp1251", "CP1251"},
    {"x-user-defined", ""},
}};

// iconv name for a label, or empty when the label must be rejected.
std::string iconv_name(std::string_view label) {
  std::string lowered = ascii_lower(trim(label));
  if (lowered.empty())
    return {};
  // glibc accepts "//TRANSLIT" style suffixes and paths; labels never need them.
  bool plain = std::all_of(lowered.begin(), lowered.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == ':' ||
           c == '+';
  });
  if (!plain)
    return {};
  for (const auto& [alias, name] : kAliases)
    if (alias == lowered)
      return std::string(name);
  return lowered;
}

class Converter {
 public:
  explicit Converter(const std::string& from) {
    if (!from.empty())
      cd_ = iconv_open("UTF-8", from.c_str());
  }
  ~Converter() {
    if (valid())
      iconv_close(cd_);
  }
  Converter(const Converter&) = delete;
  Converter& operator=(const Converter&) = delete;

  bool valid() const { return cd_ != reinterpret_cast<iconv_t>(-1); }

  // Converts input; on an invalid sequence either fails (lenient=false) or
  // emits U+FFFD and skips one byte.
  std::optional<std::string> convert(std::string_view input, bool lenient) {
    std::string out;
    out.reserve(input.size() + input.size() / 2 + 16);
    char* in_ptr = const_cast<char*>(input.data());
    std::size_t in_left = input.size();
    std::array<char, 4096> buffer;
    while (true) {
      char* out_ptr = buffer.data();
      std::size_t out_left = buffer.size();
      std::size_t rc = in_left ? iconv(cd_, &in_ptr, &in_left, &out_ptr, &out_left)
                               : iconv(cd_, nullptr, nullptr, &out_ptr, &out_left);
      out.append(buffer.data(), buffer.size() - out_left);
      if (rc != static_cast<std::size_t>(-1)) {
        if (in_left == 0) {
          // Flush shift state once more in case the last call converted input.
          out_ptr = buffer.data();
          out_left = buffer.size();
          iconv(cd_, nullptr, nullptr, &out_ptr, &out_left);
          out.append(buffer.data(), buffer.size() - out_left);
          return out;
        }
        continue;
      }
      if (errno == E2BIG)
        continue;
      if (!lenient)
        return std::nullopt;
      out += "\xEF\xBF\xBD";
      ++in_ptr;
      --in_left;
      iconv(cd_, nullptr, nullptr, nullptr, nullptr);
    }
  }

 private:
  iconv_t cd_ = reinterpret_cast<iconv_t>(-1);
};

}  // namespace

std::string_view to_string(CharsetSource source) {
  switch (source) {
    case CharsetSource::kContentTypeHeader: return "content-type-header";
    case CharsetSource::kXmlDeclaration: return "xml-declaration";
    case CharsetSource::kDefaultUtf8: return "default-utf8";
    case CharsetSource::kFallbackUtf8: return "fallback-utf8";
  }
  return "default-utf8";
}

std::optional<CharsetSource> charset_source_from_string(std::string_view text) {
  for (auto source : {CharsetSource::kContentTypeHeader, CharsetSource::kXmlDeclaration,
                      CharsetSource::kDefaultUtf8, CharsetSource::kFallbackUtf8})
    if (to_string(source) == text)
      return source;
  return std::nullopt;
}

ContentType parse_content_type(std::string_view header_value) {
  ContentType result;
  std::size_t pos = header_value.find(';');
  result.media_type = ascii_lower(trim(header_value.substr(0, pos)));
  while (pos != std::string_view::npos) {
    ++pos;
    std::size_t eq = header_value.find_first_of("=;", pos);
    if (eq == std::string_view::npos)
      break;
    if (header_value[eq] == ';') {
      pos = eq;
      continue;
    }
    std::string name = ascii_lower(trim(header_value.substr(pos, eq - pos)));
    pos = eq + 1;
    while (pos < header_value.size() && (header_value[pos] == ' ' || header_value[pos] == '\t'))
      ++pos;
    std::string value;
    if (pos < header_value.size() && header_value[pos] == '"') {
      for (++pos; pos < header_value.size() && header_value[pos] != '"'; ++pos) {
        if (header_value[pos] == '\\' && pos + 1 < header_value.size())
          ++pos;
        value.push_back(header_value[pos]);
      }
      pos = header_value.find(';', pos);
    } else {
      std::size_t end = header_value.find(';', pos);
      value = std::string(trim(header_value.substr(pos, end == std::string_view::npos ? end : end - pos)));
      pos = end;
    }
    if (name == "charset" && !result.charset && !trim(value).empty())
      result.charset = ascii_lower(trim(value));
  }
  return result;
}

bool is_html_media_type(std::string_view media_type) {
  return media_type == "text/html" || media_type == "application/xhtml+xml";
}

std::optional<std::string> xml_declared_encoding(std::string_view body) {
  if (body.starts_with("\xEF\xBB\xBF"))
    body.remove_prefix(3);
  std::size_t start = body.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos || body.substr(start, 5) != "<?xml")
    return std::nullopt;
  std::size_t end = body.find("?>", start);
  if (end == std::string_view::npos)
    return std::nullopt;
  std::string decl(body.substr(start, end - start));
  static const std::regex kEncoding(R"(\sencoding\s*=\s*["']([A-Za-z][A-Za-z0-9._:+-]*)["'])");
  std::smatch match;
  if (!std::regex_search(decl, match, kEncoding))
    return std::nullopt;
  return ascii_lower(match[1].str());
}

bool is_known_charset(std::string_view label) {
  return Converter(iconv_name(label)).valid();
}

std::optional<std::string> decode_strict(std::string_view bytes, std::string_view label) {
  Converter converter(iconv_name(label));
  if (!converter.valid())
    return std::nullopt;
  return converter.convert(bytes, false);
}

std::string decode_lenient(std::string_view bytes, std::string_view label) {
  Converter converter(iconv_name(label));
  if (converter.valid())
    return *converter.convert(bytes, true);
  Converter utf8("UTF-8");
  return *utf8.convert(bytes, true);
}

DecodedBody decode_body(const HeaderList& headers, std::string_view body, bool strict) {
  DecodedBody result;

  // Step 1: Content-Type charset, else UTF-8.
  std::optional<std::string> header_charset;
  if (auto content_type = find_header(headers, "content-type"))
    header_charset = parse_content_type(*content_type).charset;
  CharsetDecision saved = header_charset ? CharsetDecision{*header_charset, CharsetSource::kContentTypeHeader}
                                         : CharsetDecision{"utf-8", CharsetSource::kDefaultUtf8};

  // Step 2a: an XHTML document's own declaration wins.
  if (auto declared = xml_declared_encoding(body))
    saved = {*declared, CharsetSource::kXmlDeclaration};

  // Step 2b: trial decode with the saved charset.
  if (auto text = decode_strict(body, saved.charset)) {
    result.decision = std::move(saved);
    result.text = std::move(*text);
    return result;
  }

  // Step 2c: UTF-8.
  if (auto text = decode_strict(body, "utf-8")) {
    result.decision = {"utf-8", CharsetSource::kFallbackUtf8};
    result.text = std::move(*text);
    return result;
  }

  // Step 2d.
  if (strict)
    throw Undecodable("body decodes neither as '" + saved.charset + "' nor as utf-8");
  result.decision = {"utf-8", CharsetSource::kFallbackUtf8};
  result.text = decode_lenient(body, "utf-8");
  result.undecodable = true;
  return result;
}

CharsetDecision detect_charset(const HeaderList& headers, std::string_view body) {
  return decode_body(headers, body, true).decision;
}

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
  for (const auto& [key, value] : headers)
    if (iequals(key, name))
      return value;
  return std::nullopt;
}

bool iequals(std::string_view a, std::string_view b) {
  auto fold = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [&](char x, char y) { return fold(x) == fold(y); });
}

}  // namespace memharvest
