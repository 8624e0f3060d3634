#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memharvest/acquisition.h"
#include "memharvest/rules.h"
#include "memharvest/store.h"

namespace memharvest {

// One URI per line; blank lines and lines starting with '#' are skipped and
// surrounding whitespace is trimmed. Throws IoError, or InvalidUri carrying
// the offending line number.
std::vector<std::string> read_uri_list(const std::filesystem::path& path);

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path store;
  std::optional<std::filesystem::path> rules;
  FetchPolicy policy;
  int workers = 1;
  bool strict_decode = false;
  std::optional<std::filesystem::path> report;
};

struct PipelineStats {
  std::size_t total = 0;
  std::size_t fetched = 0;  // URIs that went to the network
  std::size_t skipped = 0;  // already ok in the store
};

// Fetches and extracts every URI of config.input into config.store, skipping
// URIs whose stored entry is already ok. Rewrites <store>/manifest.tsv with
// one record per input line. Throws on input, rules or store failures only;
// per-URI failures become outcome classes.
PipelineStats run_pipeline(const RunConfig& config, std::ostream& log);

// Fetch-and-extract for a single URI, as the pipeline does it. Never throws
// for per-URI failures.
ManifestRecord process_uri(const std::string& uri, const Store& store, const RuleSet& rules,
                           const FetchPolicy& policy, bool strict_decode, HostRateLimiter& limiter,
                           std::string* failure = nullptr);

struct Report {
  std::size_t total = 0;
  std::map<OutcomeClass, std::size_t> classes;

  std::size_t problematic() const;
  double problematic_percent() const;
};

Report compute_report(const std::vector<ManifestRecord>& records);
std::string format_report_text(const Report& report);
// {"total":n,"classes":{class:count,...}}
std::string format_report_json(const Report& report);
std::string format_percent(double percent);

// Entry point behind the memharvest executable. args excludes the program
// name. Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memharvest
