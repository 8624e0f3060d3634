#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace memharvest {

// RFC 3986 generic URI split into its five components. Components that are
// absent (as opposed to empty) are std::nullopt so that recomposition is
// lossless.
struct Uri {
  std::string scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  // Lowercased host without port, userinfo or IPv6 brackets. Empty when the
  // URI has no authority.
  std::string host() const;
  std::optional<int> port() const;
  // "host:port" with the scheme default port filled in. Used to key per-host
  // state such as the rate limiter.
  std::string host_and_port() const;

  std::string str() const;
  friend bool operator==(const Uri&, const Uri&) = default;
};

// Parses any URI reference (absolute or relative). Never throws; anything is
// a valid relative reference in the worst case.
Uri parse_uri_reference(std::string_view text);

// Parses an absolute http(s) URI with a non-empty host. Throws InvalidUri.
Uri parse_absolute_uri(std::string_view text);

bool is_absolute_http_uri(std::string_view text);

// Reference resolution (RFC 3986 section 5.2.2, strict). The fragment of the
// reference is kept.
Uri resolve_reference(const Uri& base, const Uri& reference);
std::string resolve_reference(std::string_view base, std::string_view reference);

std::string remove_dot_segments(std::string_view path);

}  // namespace memharvest
