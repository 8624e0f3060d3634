#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memharvest/headers.h"

namespace memharvest::testkit {

struct ScriptedResponse {
  int status = 200;
  HeaderList headers;
  std::string body;
  int delay_ms = 0;
};

// Responses are served in order; the last one repeats. When `cookie` is set
// ("name=value") the route only answers requests carrying that cookie.
// Several routes may share a path; the first applicable one wins.
struct Route {
  std::string path;
  std::optional<std::string> cookie;
  std::vector<ScriptedResponse> responses;
};

// Answers with `status` instead of the script whenever more than per_second
// requests arrived within the last second (this one included).
struct RateTrip {
  double per_second = 1.0;
  int status = 429;
};

struct Scenario {
  std::vector<Route> routes;
  std::optional<RateTrip> rate_trip;

  // body_file paths are relative to base_dir. Throws ParseError or IoError.
  static Scenario parse(std::string_view json, const std::filesystem::path& base_dir);
  static Scenario load_file(const std::filesystem::path& path);
};

struct LoggedRequest {
  std::chrono::steady_clock::time_point at;
  std::string method;
  std::string target;
  std::string host;
  std::string cookie;
  int status = 0;
  bool tripped = false;
};

// Replay server on 127.0.0.1 with an ephemeral port.
class Server {
 public:
  // Throws BindError.
  explicit Server(Scenario scenario);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const;
  std::string base_url() const;  // "http://127.0.0.1:PORT"

  // CONNECT_TO entry sending every host and port to this server, so archive
  // URIs can be used unchanged (see FetchPolicy::connect_to).
  std::string connect_to() const;

  std::vector<LoggedRequest> log() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Largest number of requests inside any half-open window (t - width, t].
std::size_t max_requests_in_window(const std::vector<LoggedRequest>& log, std::chrono::duration<double> width);

// --- Fixture corpus ----------------------------------------------------------

struct Fixture {
  std::string file;                   // relative to the corpus root
  std::optional<std::string> base;    // base document name for wrapped variants
  std::string wrapper;                // plain, wayback, uk, proni, archive-is, pathological
  std::string uri;                    // URI the fixture is served under
  std::string content_type;
  std::optional<std::string> expected;  // golden text file, relative
  std::optional<long long> null_bytes;
  std::optional<long long> faux_tags;
};

struct CorpusManifest {
  std::filesystem::path root;
  std::vector<Fixture> fixtures;

  const Fixture* find(std::string_view file) const;
  std::string read(const Fixture& fixture) const;
  std::optional<std::string> read_expected(const Fixture& fixture) const;
};

// Corpus committed with the sources.
std::filesystem::path default_corpus_dir();

// Reads manifest.json of a corpus directory. Throws ParseError or IoError.
CorpusManifest load_corpus(const std::filesystem::path& root);

// Copies the corpus into `output` and returns its manifest rooted there.
// Throws IoError.
CorpusManifest build_corpus(const std::filesystem::path& output,
                            const std::filesystem::path& source = default_corpus_dir());

}  // namespace memharvest::testkit
