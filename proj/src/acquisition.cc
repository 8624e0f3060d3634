#include "memharvest/acquisition.h"

#include <regex>
#include <set>
#include <utility>

#include "http_session.h"
#include "memharvest/charset.h"
#include "memharvest/error.h"
#include "memharvest/html.h"
#include "memharvest/uri.h"

namespace memharvest {
namespace {

std::string unescape_js(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && (text[i + 1] == '/' || text[i + 1] == '"' || text[i + 1] == '\'')) {
      out.push_back(text[++i]);
      continue;
    }
    out.push_back(text[i]);
  }
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

// Parses a refresh content attribute: "N", "N; url=U", "N;URL='U'", "N, U".
std::optional<std::pair<double, std::string>> parse_refresh_content(std::string_view content) {
  std::size_t i = 0;
  while (i < content.size() && is_space(content[i]))
    ++i;
  std::size_t number_start = i;
  while (i < content.size() && content[i] >= '0' && content[i] <= '9')
    ++i;
  std::size_t integer_end = i;
  if (i < content.size() && content[i] == '.') {
    ++i;
    while (i < content.size() && content[i] >= '0' && content[i] <= '9')
      ++i;
  }
  std::string_view number = content.substr(number_start, i - number_start);
  if (number.empty() || number == "." || (integer_end == number_start && number.size() == 1))
    return std::nullopt;
  double delay = std::stod(std::string(number.front() == '.' ? "0" + std::string(number) : std::string(number)));

  while (i < content.size() && is_space(content[i]))
    ++i;
  if (i < content.size() && (content[i] == ';' || content[i] == ',')) {
    ++i;
    while (i < content.size() && is_space(content[i]))
      ++i;
  } else if (i < content.size()) {
    return std::nullopt;  // junk directly after the delay
  }

  std::string_view url = content.substr(i);
  if (url.size() >= 3 && (url[0] == 'u' || url[0] == 'U') && (url[1] == 'r' || url[1] == 'R') &&
      (url[2] == 'l' || url[2] == 'L')) {
    std::size_t j = 3;
    while (j < url.size() && is_space(url[j]))
      ++j;
    if (j < url.size() && url[j] == '=') {
      ++j;
      while (j < url.size() && is_space(url[j]))
        ++j;
      url = url.substr(j);
    }
  }
  if (!url.empty() && (url.front() == '"' || url.front() == '\'')) {
    char quote = url.front();
    url.remove_prefix(1);
    auto close = url.find(quote);
    if (close != std::string_view::npos)
      url = url.substr(0, close);
  }
  while (!url.empty() && is_space(url.back()))
    url.remove_suffix(1);
  return std::make_pair(delay, std::string(url));
}

void collect_frames(const html::Node& node, std::vector<Frame>& frames) {
  for (const auto& child : node.children()) {
    if (child->is_element("frame")) {
      const std::string* name = child->attribute("name");
      const std::string* src = child->attribute("src");
      frames.push_back({name ? *name : std::string(), src ? *src : std::string()});
    } else if (child->is_element("frameset")) {
      collect_frames(*child, frames);
    }
  }
}

bool scannable(const HeaderList& headers) {
  auto content_type = find_header(headers, "content-type");
  return !content_type || is_html_media_type(parse_content_type(*content_type).media_type);
}

std::string choose_frame(const std::vector<Frame>& frames, const ArchiveRule& rule, const std::string& page) {
  std::vector<const Frame*> candidates;
  for (const auto& frame : frames)
    if (!frame.src.empty())
      candidates.push_back(&frame);
  if (rule.frame_select) {
    for (const Frame* frame : candidates)
      if (frame->name == *rule.frame_select)
        return frame->src;
  }
  if (candidates.size() == 1)
    return candidates.front()->src;
  throw FrameAmbiguous(page + ": frameset with " + std::to_string(candidates.size()) +
                       " frames and no applicable frame selection (archive rule '" + rule.archive_id + "')");
}

}  // namespace

std::vector<JsRedirectPattern> default_js_redirect_patterns() {
  return {
      {"wayback-impatient-link", std::string(kWaybackRedirectMarker),
       R"re(<p class="impatient"><a href="([^"]+)")re"},
      {"wayback-location-href", std::string(kWaybackRedirectMarker),
       R"re(document\.location\.href\s*=\s*"([^"]+)")re"},
  };
}

std::string_view to_string(RedirectKind kind) {
  switch (kind) {
    case RedirectKind::kHttp: return "http";
    case RedirectKind::kJsPage: return "js-page";
    case RedirectKind::kMetaRefresh: return "meta-refresh";
    case RedirectKind::kFrame: return "frame";
  }
  return "http";
}

std::optional<RedirectKind> redirect_kind_from_string(std::string_view text) {
  for (auto kind : {RedirectKind::kHttp, RedirectKind::kJsPage, RedirectKind::kMetaRefresh, RedirectKind::kFrame})
    if (to_string(kind) == text)
      return kind;
  return std::nullopt;
}

std::optional<std::string> detect_js_redirect(std::string_view body, std::string_view base_uri,
                                              const std::vector<JsRedirectPattern>& patterns) {
  std::string text(body);
  for (const auto& pattern : patterns) {
    std::regex marker(pattern.marker);
    if (!std::regex_search(text, marker))
      continue;
    std::regex target(pattern.target);
    std::smatch match;
    if (!std::regex_search(text, match, target) || match.size() < 2 || match[1].length() == 0)
      continue;
    std::string reference = html::decode_entities(unescape_js(match[1].str()), true);
    return resolve_reference(base_uri, reference);
  }
  return std::nullopt;
}

std::optional<MetaRefresh> detect_meta_refresh(std::string_view body, std::string_view base_uri,
                                               std::string* problem) {
  html::Tokenizer tokenizer(body);
  while (auto token = tokenizer.next()) {
    if (token->type != html::Token::Type::kStartTag || token->name != "meta")
      continue;
    const std::string* equiv = token->attribute("http-equiv");
    if (!equiv || !iequals(*equiv, "refresh"))
      continue;
    const std::string* content = token->attribute("content");
    if (!content) {
      if (problem)
        *problem = "meta refresh without a content attribute";
      return std::nullopt;
    }
    auto parsed = parse_refresh_content(*content);
    if (!parsed) {
      if (problem)
        *problem = "unparseable meta refresh content \"" + *content + "\"";
      return std::nullopt;
    }
    MetaRefresh refresh{parsed->first, std::nullopt};
    if (!parsed->second.empty())
      refresh.target = resolve_reference(base_uri, parsed->second);
    return refresh;
  }
  return std::nullopt;
}

std::optional<std::vector<Frame>> detect_frameset(std::string_view body) {
  html::Document doc = html::Document::parse(body);
  for (const auto& top : doc.root().children()) {
    if (!top->is_element("html"))
      continue;
    for (const auto& child : top->children()) {
      if (!child->is_element("frameset"))
        continue;
      std::vector<Frame> frames;
      collect_frames(*child, frames);
      return frames;
    }
  }
  return std::nullopt;
}

FetchOutcome resolve(const std::string& uri, const FetchPolicy& policy, const RuleSet& rules,
                     HostRateLimiter& limiter) {
  policy.validate();
  parse_absolute_uri(uri);

  FetchOutcome outcome;
  outcome.request_uri = uri;
  CookieJar cookies;
  HttpSession session;
  std::set<std::pair<RedirectKind, std::string>> seen;
  std::string current = uri;

  auto hop = [&](RedirectStep step) {
    if (static_cast<int>(outcome.chain.size()) + 1 > policy.max_redirects)
      throw RedirectLimit(uri + ": more than " + std::to_string(policy.max_redirects) + " redirects");
    if (!seen.emplace(step.kind, step.to_uri).second)
      throw RedirectLoop(uri + ": " + std::string(to_string(step.kind)) + " redirect to " + step.to_uri +
                         " repeats");
    if (!is_absolute_http_uri(step.to_uri))
      throw InvalidUri(current + ": redirect target is not an absolute http(s) URI: " + step.to_uri);
    current = step.to_uri;
    outcome.chain.push_back(std::move(step));
  };

  while (true) {
    RawResponse response = fetch_with_session(session, current, policy, cookies, limiter);
    outcome.attempts += response.attempts;

    if (response.status >= 300 && response.status <= 399) {
      if (auto location = find_header(response.headers, "location"); location && !location->empty()) {
        hop({RedirectKind::kHttp, current, resolve_reference(current, *location), response.status, std::nullopt});
        continue;
      }
    }

    if (response.status >= 200 && response.status <= 299 && scannable(response.headers)) {
      if (auto target = detect_js_redirect(response.body, current, policy.js_redirect_patterns)) {
        hop({RedirectKind::kJsPage, current, *target, std::nullopt, std::nullopt});
        continue;
      }
      auto refresh = detect_meta_refresh(response.body, current);
      if (refresh && refresh->target && *refresh->target != current) {
        hop({RedirectKind::kMetaRefresh, current, *refresh->target, std::nullopt, refresh->delay});
        continue;
      }
      if (auto frames = detect_frameset(response.body); frames && !frames->empty()) {
        const ArchiveRule& rule = match_archive(current, rules);
        std::string src = choose_frame(*frames, rule, current);
        hop({RedirectKind::kFrame, current, resolve_reference(current, src), std::nullopt, std::nullopt});
        continue;
      }
    }

    outcome.final_uri = current;
    outcome.status = response.status;
    outcome.headers = std::move(response.headers);
    outcome.body = std::move(response.body);
    outcome.fetched_at = std::chrono::system_clock::now();
    return outcome;
  }
}

FetchOutcome resolve(const std::string& uri, const FetchPolicy& policy) {
  static const RuleSet rules = builtin_rules();
  return resolve(uri, policy, rules);
}

}  // namespace memharvest
