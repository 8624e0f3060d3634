#include <curl/curl.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <thread>

#include "http_session.h"
#include "memharvest/acquisition.h"
#include "memharvest/error.h"
#include "memharvest/uri.h"

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
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

void global_init() {
  static const bool initialized = [] {
    if (curl_global_init(CURL_GLOBAL_DEFAULT) != CURLE_OK)
      throw NetworkError("curl_global_init failed");
    return true;
  }();
  (void)initialized;
}

std::size_t on_body(char* data, std::size_t size, std::size_t count, void* user) {
  static_cast<std::string*>(user)->append(data, size * count);
  return size * count;
}

std::size_t on_header(char* data, std::size_t size, std::size_t count, void* user) {
  auto* headers = static_cast<HeaderList*>(user);
  std::string_view line(data, size * count);
  if (line.starts_with("HTTP/")) {
    headers->clear();  // interim (1xx) response or a new status line
    return size * count;
  }
  std::string_view content = trim(line);
  if (content.empty())
    return size * count;
  if ((line.front() == ' ' || line.front() == '\t') && !headers->empty()) {
    headers->back().second += " " + std::string(content);
    return size * count;
  }
  auto colon = line.find(':');
  if (colon == std::string_view::npos)
    return size * count;
  headers->emplace_back(std::string(line.substr(0, colon)), std::string(trim(line.substr(colon + 1))));
  return size * count;
}

struct SlistDeleter {
  void operator()(curl_slist* list) const { curl_slist_free_all(list); }
};
using Slist = std::unique_ptr<curl_slist, SlistDeleter>;

}  // namespace

// --- HttpSession -----------------------------------------------------------

HttpSession::HttpSession() {
  global_init();
  handle_ = curl_easy_init();
  if (!handle_)
    throw NetworkError("curl_easy_init failed");
}

HttpSession::~HttpSession() {
  if (handle_)
    curl_easy_cleanup(handle_);
}

HttpSession::Result HttpSession::get(const std::string& uri, const FetchPolicy& policy,
                                     const std::optional<std::string>& cookie_header) {
  Result result;
  CURL* curl = handle_;
  curl_easy_reset(curl);

  Slist request_headers;
  if (cookie_header)
    request_headers.reset(curl_slist_append(nullptr, ("Cookie: " + *cookie_header).c_str()));
  Slist connect_to;
  for (const auto& entry : policy.connect_to)
    connect_to.reset(curl_slist_append(connect_to.release(), entry.c_str()));

  auto timeout_ms = static_cast<long>(std::ceil(policy.request_timeout * 1000.0));
  curl_easy_setopt(curl, CURLOPT_URL, uri.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 0L);
  curl_easy_setopt(curl, CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(curl, CURLOPT_HTTP_VERSION, CURL_HTTP_VERSION_1_1);
  curl_easy_setopt(curl, CURLOPT_PROTOCOLS, CURLPROTO_HTTP | CURLPROTO_HTTPS);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT_MS, timeout_ms);
  curl_easy_setopt(curl, CURLOPT_USERAGENT, policy.user_agent.c_str());
  curl_easy_setopt(curl, CURLOPT_HTTPHEADER, request_headers.get());
  curl_easy_setopt(curl, CURLOPT_CONNECT_TO, connect_to.get());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, on_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &result.body);
  curl_easy_setopt(curl, CURLOPT_HEADERFUNCTION, on_header);
  curl_easy_setopt(curl, CURLOPT_HEADERDATA, &result.headers);

  CURLcode code = curl_easy_perform(curl);
  if (code == CURLE_OPERATION_TIMEDOUT) {
    result.timed_out = true;
    result.error = curl_easy_strerror(code);
    return result;
  }
  if (code != CURLE_OK)
    throw NetworkError(uri + ": " + curl_easy_strerror(code));
  long status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  result.status = static_cast<int>(status);
  return result;
}

// --- CookieJar -------------------------------------------------------------

void CookieJar::store(std::string_view request_host, std::string_view set_cookie) {
  auto semi = set_cookie.find(';');
  std::string_view pair = trim(set_cookie.substr(0, semi));
  auto eq = pair.find('=');
  if (eq == std::string_view::npos || trim(pair.substr(0, eq)).empty())
    return;
  Cookie cookie{std::string(trim(pair.substr(0, eq))), std::string(trim(pair.substr(eq + 1))),
                ascii_lower(request_host), true};

  while (semi != std::string_view::npos) {
    std::string_view rest = set_cookie.substr(semi + 1);
    auto next = rest.find(';');
    std::string_view attribute = trim(rest.substr(0, next));
    semi = next == std::string_view::npos ? next : semi + 1 + next;
    auto attr_eq = attribute.find('=');
    if (attr_eq == std::string_view::npos)
      continue;
    if (ascii_lower(trim(attribute.substr(0, attr_eq))) != "domain")
      continue;
    std::string domain = ascii_lower(trim(attribute.substr(attr_eq + 1)));
    if (domain.starts_with("."))
      domain.erase(0, 1);
    std::string host = ascii_lower(request_host);
    // A server may only widen a cookie to one of its own parent domains.
    if (!domain.empty() && (host == domain || host.ends_with("." + domain))) {
      cookie.domain = domain;
      cookie.host_only = false;
    }
  }

  for (auto& existing : cookies_) {
    if (existing.name == cookie.name && existing.domain == cookie.domain) {
      existing = std::move(cookie);
      return;
    }
  }
  cookies_.push_back(std::move(cookie));
}

std::optional<std::string> CookieJar::header_for(std::string_view host) const {
  std::string lowered = ascii_lower(host);
  std::string header;
  for (const auto& cookie : cookies_) {
    bool applies = cookie.host_only ? lowered == cookie.domain
                                    : (lowered == cookie.domain || lowered.ends_with("." + cookie.domain));
    if (!applies)
      continue;
    if (!header.empty())
      header += "; ";
    header += cookie.name + "=" + cookie.value;
  }
  if (header.empty())
    return std::nullopt;
  return header;
}

// --- HostRateLimiter -------------------------------------------------------

void HostRateLimiter::acquire(const std::string& host_key, double rate) {
  auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate));
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    auto now = Clock::now();
    auto& next = next_slot_[host_key];
    slot = std::max(now, next);
    next = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

HostRateLimiter& HostRateLimiter::process_wide() {
  static HostRateLimiter limiter;
  return limiter;
}

// --- FetchPolicy / fetch_once ---------------------------------------------

void FetchPolicy::validate() const {
  if (max_redirects < 1)
    throw std::invalid_argument("max_redirects must be at least 1");
  if (!(per_host_rate > 0) || !std::isfinite(per_host_rate))
    throw std::invalid_argument("per_host_rate must be positive");
  if (retry_attempts < 0)
    throw std::invalid_argument("retry_attempts must be non-negative");
  if (!(retry_backoff_base >= 0) || !std::isfinite(retry_backoff_base))
    throw std::invalid_argument("retry_backoff_base must be non-negative");
  if (!(request_timeout > 0))
    throw std::invalid_argument("request_timeout must be positive");
}

RawResponse fetch_with_session(HttpSession& session, const std::string& uri, const FetchPolicy& policy,
                               CookieJar& cookies, HostRateLimiter& limiter) {
  Uri parsed = parse_absolute_uri(uri);
  std::string host = parsed.host();
  std::string host_key = parsed.host_and_port();

  RawResponse response;
  std::string last_failure;
  while (true) {
    limiter.acquire(host_key, policy.per_host_rate);
    ++response.attempts;
    HttpSession::Result result = session.get(uri, policy, cookies.header_for(host));
    for (const auto& [name, value] : result.headers)
      if (iequals(name, "set-cookie"))
        cookies.store(host, value);

    bool transient = result.timed_out || result.status >= 500;
    if (!transient) {
      response.status = result.status;
      response.headers = std::move(result.headers);
      response.body = std::move(result.body);
      return response;
    }
    last_failure = result.timed_out ? result.error : "HTTP " + std::to_string(result.status);
    if (response.attempts > policy.retry_attempts)
      throw TooManyRetries(uri + ": gave up after " + std::to_string(response.attempts) +
                           " attempts (last: " + last_failure + ")");
    double delay = policy.retry_backoff_base * std::pow(2.0, response.attempts - 1);
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
  }
}

RawResponse fetch_once(const std::string& uri, const FetchPolicy& policy, CookieJar& cookies,
                       HostRateLimiter& limiter) {
  policy.validate();
  HttpSession session;
  return fetch_with_session(session, uri, policy, cookies, limiter);
}

}  // namespace memharvest
