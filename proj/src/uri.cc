#include "memharvest/uri.h"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "memharvest/error.h"

namespace memharvest {
namespace {

bool is_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Strips userinfo, returning "host[:port]".
std::string_view host_port_part(std::string_view authority) {
  auto at = authority.rfind('@');
  if (at != std::string_view::npos)
    authority.remove_prefix(at + 1);
  return authority;
}

// Splits "host[:port]" honouring IPv6 brackets.
std::pair<std::string_view, std::string_view> split_host_port(std::string_view hp) {
  if (!hp.empty() && hp.front() == '[') {
    auto close = hp.find(']');
    if (close == std::string_view::npos)
      return {hp, {}};
    std::string_view host = hp.substr(0, close + 1);
    std::string_view rest = hp.substr(close + 1);
    if (!rest.empty() && rest.front() == ':')
      return {host, rest.substr(1)};
    return {host, {}};
  }
  auto colon = hp.rfind(':');
  if (colon == std::string_view::npos)
    return {hp, {}};
  return {hp.substr(0, colon), hp.substr(colon + 1)};
}

std::string clean_reference(std::string_view text) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
  while (!text.empty() && is_space(text.front()))
    text.remove_prefix(1);
  while (!text.empty() && is_space(text.back()))
    text.remove_suffix(1);
  std::string out;
  out.reserve(text.size());
  for (char c : text)
    if (c != '\t' && c != '\n' && c != '\r')
      out.push_back(c);
  return out;
}

std::string merge_paths(const Uri& base, std::string_view ref_path) {
  if (base.authority && base.path.empty())
    return "/" + std::string(ref_path);
  auto slash = base.path.rfind('/');
  if (slash == std::string::npos)
    return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

}  // namespace

std::string Uri::host() const {
  if (!authority)
    return {};
  auto [host, port] = split_host_port(host_port_part(*authority));
  if (host.size() >= 2 && host.front() == '[')
    host = host.substr(1, host.size() - 2);
  return to_lower(host);
}

std::optional<int> Uri::port() const {
  if (!authority)
    return std::nullopt;
  auto [host, port] = split_host_port(host_port_part(*authority));
  if (port.empty())
    return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size())
    return std::nullopt;
  return value;
}

std::string Uri::host_and_port() const {
  int p = port().value_or(to_lower(scheme) == "https" ? 443 : 80);
  return host() + ":" + std::to_string(p);
}

std::string Uri::str() const {
  std::string out;
  if (!scheme.empty())
    out += scheme + ":";
  if (authority)
    out += "//" + *authority;
  out += path;
  if (query)
    out += "?" + *query;
  if (fragment)
    out += "#" + *fragment;
  return out;
}

Uri parse_uri_reference(std::string_view text) {
  Uri uri;
  std::string_view rest = text;

  auto colon = rest.find(':');
  auto delim = rest.find_first_of("/?#");
  if (colon != std::string_view::npos && (delim == std::string_view::npos || colon < delim) &&
      is_scheme(rest.substr(0, colon))) {
    uri.scheme = std::string(rest.substr(0, colon));
    rest.remove_prefix(colon + 1);
  }

  if (rest.starts_with("//")) {
    rest.remove_prefix(2);
    auto end = rest.find_first_of("/?#");
    uri.authority = std::string(rest.substr(0, end));
    rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
  }

  auto hash = rest.find('#');
  if (hash != std::string_view::npos) {
    uri.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  auto question = rest.find('?');
  if (question != std::string_view::npos) {
    uri.query = std::string(rest.substr(question + 1));
    rest = rest.substr(0, question);
  }
  uri.path = std::string(rest);
  return uri;
}

Uri parse_absolute_uri(std::string_view text) {
  Uri uri = parse_uri_reference(clean_reference(text));
  std::string scheme = to_lower(uri.scheme);
  if (scheme != "http" && scheme != "https")
    throw InvalidUri("not an absolute http(s) URI: " + std::string(text));
  if (!uri.authority || uri.host().empty())
    throw InvalidUri("URI has no host: " + std::string(text));
  auto [host, port] = split_host_port(host_port_part(*uri.authority));
  if (!port.empty() && !uri.port())
    throw InvalidUri("URI has an invalid port: " + std::string(text));
  for (char c : host)
    if (static_cast<unsigned char>(c) <= 0x20 || c == '<' || c == '>' || c == '"' || c == '\\')
      throw InvalidUri("URI host contains invalid characters: " + std::string(text));
  return uri;
}

bool is_absolute_http_uri(std::string_view text) {
  try {
    parse_absolute_uri(text);
    return true;
  } catch (const InvalidUri&) {
    return false;
  }
}

std::string remove_dot_segments(std::string_view input) {
  std::string in(input);
  std::string out;
  while (!in.empty()) {
    if (in.starts_with("../")) {
      in.erase(0, 3);
    } else if (in.starts_with("./")) {
      in.erase(0, 2);
    } else if (in.starts_with("/./")) {
      in.erase(0, 2);
    } else if (in == "/.") {
      in = "/";
    } else if (in.starts_with("/../") || in == "/..") {
      in = in.size() == 3 ? std::string("/") : in.substr(3);
      auto slash = out.rfind('/');
      out.erase(slash == std::string::npos ? 0 : slash);
    } else if (in == "." || in == "..") {
      in.clear();
    } else {
      std::size_t start = in.front() == '/' ? 1 : 0;
      auto next = in.find('/', start);
      if (next == std::string::npos)
        next = in.size();
      out += in.substr(0, next);
      in.erase(0, next);
    }
  }
  return out;
}

Uri resolve_reference(const Uri& base, const Uri& ref) {
  Uri target;
  if (!ref.scheme.empty()) {
    target = ref;
    target.path = remove_dot_segments(ref.path);
  } else {
    if (ref.authority) {
      target.authority = ref.authority;
      target.path = remove_dot_segments(ref.path);
      target.query = ref.query;
    } else {
      if (ref.path.empty()) {
        target.path = base.path;
        target.query = ref.query ? ref.query : base.query;
      } else {
        if (ref.path.front() == '/')
          target.path = remove_dot_segments(ref.path);
        else
          target.path = remove_dot_segments(merge_paths(base, ref.path));
        target.query = ref.query;
      }
      target.authority = base.authority;
    }
    target.scheme = base.scheme;
  }
  target.fragment = ref.fragment;
  return target;
}

std::string resolve_reference(std::string_view base, std::string_view reference) {
  return resolve_reference(parse_uri_reference(base), parse_uri_reference(clean_reference(reference))).str();
}

}  // namespace memharvest
