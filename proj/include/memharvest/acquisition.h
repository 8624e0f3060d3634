#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memharvest/headers.h"
#include "memharvest/rules.h"

namespace memharvest {

// A JavaScript redirect page is recognised by `marker` (ECMAScript regex,
// searched anywhere in the body) and its destination is capture group 1 of
// `target`. JavaScript string escapes ("\/") in the capture are undone.
struct JsRedirectPattern {
  std::string name;
  std::string marker;
  std::string target;

  friend bool operator==(const JsRedirectPattern&, const JsRedirectPattern&) = default;
};

// Text shown by Wayback on pages that stand in for a redirect observed at
// crawl time. The testkit redirect fixture embeds the same markup.
inline constexpr std::string_view kWaybackRedirectMarker = R"(Got an HTTP 30[0-9] response at crawl time)";

std::vector<JsRedirectPattern> default_js_redirect_patterns();

struct FetchPolicy {
  int max_redirects = 10;
  double per_host_rate = 1.0;  // requests per second, per host
  int retry_attempts = 3;      // retries after the first attempt
  double retry_backoff_base = 2.0;  // seconds; doubles with every retry
  double request_timeout = 60.0;    // seconds
  std::vector<JsRedirectPattern> js_redirect_patterns = default_js_redirect_patterns();
  std::string user_agent = "memharvest/1.0";
  // libcurl CONNECT_TO entries ("HOST:PORT:CONNECT-TO-HOST:CONNECT-TO-PORT").
  // Lets archive URIs be served by a local replay server.
  std::vector<std::string> connect_to;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

enum class RedirectKind { kHttp, kJsPage, kMetaRefresh, kFrame };

std::string_view to_string(RedirectKind kind);
std::optional<RedirectKind> redirect_kind_from_string(std::string_view text);

struct RedirectStep {
  RedirectKind kind = RedirectKind::kHttp;
  std::string from_uri;
  std::string to_uri;
  std::optional<int> status;    // kHttp only
  std::optional<double> delay;  // kMetaRefresh only

  friend bool operator==(const RedirectStep&, const RedirectStep&) = default;
};

struct FetchOutcome {
  std::string request_uri;
  std::string final_uri;
  std::vector<RedirectStep> chain;
  int status = 0;
  HeaderList headers;
  std::string body;
  std::chrono::system_clock::time_point fetched_at;
  int attempts = 0;  // HTTP requests issued across the whole chain

  std::optional<std::string> content_type() const { return find_header(headers, "content-type"); }
};

// Cookies received during one resolution. Attributes other than Domain are
// ignored and values are treated as opaque.
class CookieJar {
 public:
  void store(std::string_view request_host, std::string_view set_cookie);
  // Value for a Cookie request header, or nullopt when nothing applies.
  std::optional<std::string> header_for(std::string_view host) const;
  bool empty() const { return cookies_.empty(); }

 private:
  struct Cookie {
    std::string name;
    std::string value;
    std::string domain;
    bool host_only = true;
  };
  std::vector<Cookie> cookies_;
};

// Spaces requests to each host at least 1/rate seconds apart. One instance
// is shared by every worker in a process; see process_wide().
class HostRateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  // Blocks until the caller may send a request to host_key.
  void acquire(const std::string& host_key, double rate);

  static HostRateLimiter& process_wide();

 private:
  std::mutex mutex_;
  std::map<std::string, Clock::time_point> next_slot_;
};

struct RawResponse {
  int status = 0;
  HeaderList headers;
  std::string body;
  int attempts = 0;
};

// One GET without following redirects, retrying transient failures (timeouts
// and 5xx) with exponential backoff. Set-Cookie headers go into `cookies`.
// Throws NetworkError or TooManyRetries.
RawResponse fetch_once(const std::string& uri, const FetchPolicy& policy, CookieJar& cookies,
                       HostRateLimiter& limiter = HostRateLimiter::process_wide());

std::optional<std::string> detect_js_redirect(std::string_view body, std::string_view base_uri,
                                              const std::vector<JsRedirectPattern>& patterns);

struct MetaRefresh {
  double delay = 0;
  std::optional<std::string> target;  // absolute; nullopt means reload self

  friend bool operator==(const MetaRefresh&, const MetaRefresh&) = default;
};

// First <meta http-equiv="refresh">. When its content attribute cannot be
// parsed the result is nullopt and `problem` (if given) receives a reason.
std::optional<MetaRefresh> detect_meta_refresh(std::string_view body, std::string_view base_uri,
                                               std::string* problem = nullptr);

struct Frame {
  std::string name;
  std::string src;

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Frames of a top-level <frameset>, in document order (nested framesets
// flattened). nullopt when the document is not a frameset document.
std::optional<std::vector<Frame>> detect_frameset(std::string_view body);

// Follows HTTP redirects, JavaScript redirect pages, meta refresh and
// framesets (by the matched archive rule's frame_select) until a final
// payload. One cookie jar per call.
FetchOutcome resolve(const std::string& uri, const FetchPolicy& policy, const RuleSet& rules,
                     HostRateLimiter& limiter = HostRateLimiter::process_wide());
FetchOutcome resolve(const std::string& uri, const FetchPolicy& policy);

}  // namespace memharvest
