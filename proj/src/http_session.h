#pragma once

#include <optional>
#include <string>

#include "memharvest/acquisition.h"

typedef void CURL;

namespace memharvest {

// One libcurl easy handle; reused across the requests of a resolution so
// connections are kept alive.
class HttpSession {
 public:
  struct Result {
    int status = 0;
    HeaderList headers;
    std::string body;
    bool timed_out = false;
    std::string error;
  };

  HttpSession();
  ~HttpSession();
  HttpSession(const HttpSession&) = delete;
  HttpSession& operator=(const HttpSession&) = delete;

  // Single GET, never follows redirects. Throws NetworkError for failures
  // other than timeouts.
  Result get(const std::string& uri, const FetchPolicy& policy, const std::optional<std::string>& cookie_header);

 private:
  CURL* handle_ = nullptr;
};

RawResponse fetch_with_session(HttpSession& session, const std::string& uri, const FetchPolicy& policy,
                               CookieJar& cookies, HostRateLimiter& limiter);

}  // namespace memharvest
