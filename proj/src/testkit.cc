#include "memharvest/testkit.h"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "memharvest/error.h"

#ifndef MEMHARVEST_CORPUS_DIR
#define MEMHARVEST_CORPUS_DIR "tests/corpus"
#endif

namespace memharvest::testkit {
namespace fs = std::filesystem;

namespace {

using Json = nlohmann::json;

constexpr const char* kNoContentType = "X-Testkit-No-Content-Type";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void check_keys(const Json& object, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParseError(where + ": unknown key '" + key + "'");
  }
}

bool has_cookie(const std::string& header, const std::string& pair) {
  std::size_t pos = 0;
  while (pos <= header.size()) {
    std::size_t end = header.find(';', pos);
    std::string item = header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item == pair)
      return true;
    if (end == std::string::npos)
      break;
    pos = end + 1;
  }
  return false;
}

}  // namespace

// --- Scenario ------------------------------------------------------------------

Scenario Scenario::parse(std::string_view json, const fs::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(json);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  try {
    if (!doc.is_object())
      throw ParseError("scenario: top level must be an object");
    check_keys(doc, {"routes", "rate_trip"}, "scenario");
    Scenario scenario;
    for (const auto& r : doc.at("routes")) {
      check_keys(r, {"path", "cookie", "responses"}, "route");
      Route route;
      route.path = r.at("path").get<std::string>();
      if (r.contains("cookie") && !r["cookie"].is_null())
        route.cookie = r["cookie"].get<std::string>();
      for (const auto& s : r.at("responses")) {
        check_keys(s, {"status", "headers", "body_file", "body", "delay_ms"}, "response");
        ScriptedResponse response;
        response.status = s.value("status", 200);
        if (s.contains("headers")) {
          for (const auto& h : s["headers"]) {
            if (!h.is_array() || h.size() != 2)
              throw ParseError("response: headers must be [name, value] pairs");
            response.headers.emplace_back(h[0].get<std::string>(), h[1].get<std::string>());
          }
        }
        if (s.contains("body_file") && !s["body_file"].is_null())
          response.body = read_file(base_dir / s["body_file"].get<std::string>());
        else if (s.contains("body"))
          response.body = s["body"].get<std::string>();
        response.delay_ms = s.value("delay_ms", 0);
        route.responses.push_back(std::move(response));
      }
      if (route.responses.empty())
        throw ParseError("route " + route.path + ": empty response script");
      scenario.routes.push_back(std::move(route));
    }
    if (doc.contains("rate_trip") && !doc["rate_trip"].is_null()) {
      check_keys(doc["rate_trip"], {"per_second", "status"}, "rate_trip");
      scenario.rate_trip = RateTrip{doc["rate_trip"].at("per_second").get<double>(),
                                    doc["rate_trip"].value("status", 429)};
    }
    return scenario;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

Scenario Scenario::load_file(const fs::path& path) {
  return parse(read_file(path), path.parent_path());
}

// --- Server ------------------------------------------------------------------

struct Server::Impl {
  Scenario scenario;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  mutable std::mutex mutex;
  std::vector<std::size_t> cursors;
  std::deque<std::chrono::steady_clock::time_point> recent;
  std::vector<LoggedRequest> log;

  void handle(const httplib::Request& req, httplib::Response& res) {
    LoggedRequest entry;
    entry.at = std::chrono::steady_clock::now();
    entry.method = req.method;
    entry.target = req.target;
    entry.host = req.get_header_value("Host");
    entry.cookie = req.get_header_value("Cookie");

    const ScriptedResponse* response = nullptr;
    {
      std::lock_guard lock(mutex);
      if (scenario.rate_trip) {
        recent.push_back(entry.at);
        while (!recent.empty() && entry.at - recent.front() >= std::chrono::seconds(1))
          recent.pop_front();
        if (static_cast<double>(recent.size()) > scenario.rate_trip->per_second)
          entry.tripped = true;
      }
      if (!entry.tripped) {
        std::string path = req.target.substr(0, req.target.find('?'));
        for (std::size_t i = 0; i < scenario.routes.size() && !response; ++i) {
          const Route& route = scenario.routes[i];
          if (route.path != req.target && route.path != path)
            continue;
          if (route.cookie && !has_cookie(entry.cookie, *route.cookie))
            continue;
          std::size_t& cursor = cursors[i];
          response = &route.responses[std::min(cursor, route.responses.size() - 1)];
          ++cursor;
        }
      }
      entry.status = entry.tripped ? scenario.rate_trip->status : response ? response->status : 404;
      log.push_back(entry);
    }

    res.status = entry.status;
    if (!response) {
      res.set_header(kNoContentType, "1");
      return;
    }
    if (response->delay_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(response->delay_ms));
    bool content_type = false;
    for (const auto& [name, value] : response->headers) {
      res.headers.emplace(name, value);
      content_type = content_type || iequals(name, "Content-Type");
    }
    if (!content_type)
      res.set_header(kNoContentType, "1");
    res.body = response->body;
  }
};

Server::Server(Scenario scenario) : impl_(std::make_unique<Impl>()) {
  impl_->scenario = std::move(scenario);
  impl_->cursors.assign(impl_->scenario.routes.size(), 0);
  auto* impl = impl_.get();
  impl->http.Get(".*", [impl](const httplib::Request& req, httplib::Response& res) { impl->handle(req, res); });
  impl->http.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.has_header(kNoContentType)) {
      res.headers.erase(kNoContentType);
      res.headers.erase("Content-Type");
    }
  });
  impl->port = impl->http.bind_to_any_port("127.0.0.1");
  if (impl->port <= 0)
    throw BindError("testkit: cannot bind 127.0.0.1");
  impl->thread = std::thread([impl] { impl->http.listen_after_bind(); });
  impl->http.wait_until_ready();
}

Server::~Server() {
  stop();
}

int Server::port() const {
  return impl_->port;
}

std::string Server::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

std::string Server::connect_to() const {
  return "::127.0.0.1:" + std::to_string(impl_->port);
}

std::vector<LoggedRequest> Server::log() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

void Server::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->http.stop();
    impl_->thread.join();
  }
}

std::size_t max_requests_in_window(const std::vector<LoggedRequest>& log, std::chrono::duration<double> width) {
  std::vector<std::chrono::steady_clock::time_point> times;
  for (const auto& entry : log)
    times.push_back(entry.at);
  std::sort(times.begin(), times.end());
  std::size_t best = 0;
  std::size_t first = 0;
  for (std::size_t last = 0; last < times.size(); ++last) {
    while (times[last] - times[first] >= width)
      ++first;
    best = std::max(best, last - first + 1);
  }
  return best;
}

// --- Corpus ------------------------------------------------------------------

const Fixture* CorpusManifest::find(std::string_view file) const {
  for (const auto& fixture : fixtures)
    if (fixture.file == file)
      return &fixture;
  return nullptr;
}

std::string CorpusManifest::read(const Fixture& fixture) const {
  return read_file(root / fixture.file);
}

std::optional<std::string> CorpusManifest::read_expected(const Fixture& fixture) const {
  if (!fixture.expected)
    return std::nullopt;
  return read_file(root / *fixture.expected);
}

fs::path default_corpus_dir() {
  return MEMHARVEST_CORPUS_DIR;
}

CorpusManifest load_corpus(const fs::path& root) {
  Json doc;
  try {
    doc = Json::parse(read_file(root / "manifest.json"));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("corpus manifest: ") + e.what());
  }
  CorpusManifest manifest;
  manifest.root = root;
  try {
    for (const auto& f : doc.at("fixtures")) {
      Fixture fixture;
      fixture.file = f.at("file").get<std::string>();
      if (!f.at("base").is_null())
        fixture.base = f["base"].get<std::string>();
      fixture.wrapper = f.at("wrapper").get<std::string>();
      fixture.uri = f.at("uri").get<std::string>();
      fixture.content_type = f.at("content_type").get<std::string>();
      if (!f.at("expected").is_null())
        fixture.expected = f["expected"].get<std::string>();
      if (f.contains("null_bytes"))
        fixture.null_bytes = f["null_bytes"].get<long long>();
      if (f.contains("faux_tags"))
        fixture.faux_tags = f["faux_tags"].get<long long>();
      manifest.fixtures.push_back(std::move(fixture));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("corpus manifest: ") + e.what());
  }
  return manifest;
}

CorpusManifest build_corpus(const fs::path& output, const fs::path& source) {
  CorpusManifest manifest = load_corpus(source);
  try {
    fs::create_directories(output);
    fs::copy_file(source / "manifest.json", output / "manifest.json", fs::copy_options::overwrite_existing);
    for (const auto& fixture : manifest.fixtures) {
      for (const auto* relative : {&fixture.file, fixture.expected ? &*fixture.expected : nullptr}) {
        if (!relative)
          continue;
        fs::path target = output / *relative;
        fs::create_directories(target.parent_path());
        fs::copy_file(source / *relative, target, fs::copy_options::overwrite_existing);
      }
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  manifest.root = output;
  return manifest;
}

}  // namespace memharvest::testkit
