#include "memharvest/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "memharvest/error.h"
#include "memharvest/textify.h"
#include "memharvest/uri.h"

namespace memharvest {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_ws(s.front()))
    s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back()))
    s.remove_suffix(1);
  return s;
}

RuleSet load_rule_set(const std::optional<fs::path>& path) {
  if (!path || path->empty())
    return builtin_rules();
  return load_rules_file(path->string());
}

FetchOutcome outcome_from_entry(const StoreEntry& entry) {
  FetchOutcome outcome;
  outcome.request_uri = entry.meta.request_uri;
  outcome.final_uri = entry.meta.final_uri;
  outcome.chain = entry.meta.chain;
  outcome.status = entry.meta.status;
  outcome.headers = entry.meta.headers;
  outcome.body = entry.raw;
  outcome.fetched_at = entry.meta.fetched_at;
  return outcome;
}

// Runs extraction and records its result (or the reason there is none) on
// the entry.
void extract_into(StoreEntry& entry, const FetchOutcome& outcome, const RuleSet& rules, bool strict_decode) {
  try {
    ExtractionResult result = extract(outcome, rules, {strict_decode});
    entry.text = std::move(result.text);
    entry.diagnostics = std::move(result.diagnostics);
    entry.meta.archive_id = result.archive_id;
  } catch (const NoscriptCorruption& e) {
    entry.diagnostics.push_back({DiagnosticCode::kNoscriptCorruption, e.what(), std::nullopt});
  } catch (const Undecodable& e) {
    entry.diagnostics.push_back({DiagnosticCode::kCharsetUndecodable, e.what(), std::nullopt});
  }
}

void print_chain(std::ostream& out, const FetchOutcome& outcome) {
  for (const auto& step : outcome.chain) {
    out << to_string(step.kind);
    if (step.status)
      out << ' ' << *step.status;
    if (step.delay)
      out << " delay=" << *step.delay;
    out << ' ' << step.from_uri << " -> " << step.to_uri << '\n';
  }
  out << "final " << outcome.final_uri << " status " << outcome.status << " attempts " << outcome.attempts << '\n';
}

struct CommonFlags {
  std::optional<std::string> rules;
  double rate = 1.0;
  int retries = 3;
  double backoff = 2.0;
  int max_redirects = 10;
  double timeout = 60.0;
  std::string user_agent = FetchPolicy{}.user_agent;
  std::vector<std::string> connect_to;
  bool strict_decode = false;

  FetchPolicy policy() const {
    FetchPolicy policy;
    policy.per_host_rate = rate;
    policy.retry_attempts = retries;
    policy.retry_backoff_base = backoff;
    policy.max_redirects = max_redirects;
    policy.request_timeout = timeout;
    policy.user_agent = user_agent;
    policy.connect_to = connect_to;
    return policy;
  }
};

void add_common_flags(CLI::App* command, CommonFlags& flags) {
  command->add_option("--rules", flags.rules, "Rule file merged over the builtin archive rules")
      ->envname("MEMHARVEST_RULES");
  command->add_option("--rate", flags.rate, "Requests per second per host")->check(CLI::PositiveNumber);
  command->add_option("--retries", flags.retries, "Retries after a transient failure")->check(CLI::NonNegativeNumber);
  command->add_option("--retry-backoff", flags.backoff, "Seconds before the first retry; doubles each time")
      ->check(CLI::NonNegativeNumber);
  command->add_option("--max-redirects", flags.max_redirects, "Longest redirect chain followed")
      ->check(CLI::Range(1, 1000));
  command->add_option("--timeout", flags.timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  command->add_option("--user-agent", flags.user_agent, "User-Agent header");
  command->add_option("--connect-to", flags.connect_to,
                      "HOST:PORT:CONNECT-HOST:CONNECT-PORT override, e.g. to replay against a local server");
  command->add_flag("--strict-decode", flags.strict_decode, "Fail on undecodable bodies instead of decoding leniently");
}

}  // namespace

std::vector<std::string> read_uri_list(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read URI list " + path.string());
  std::vector<std::string> uris;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = trim(line);
    if (text.empty() || text.front() == '#')
      continue;
    if (!is_absolute_http_uri(text))
      throw InvalidUri(path.string() + ":" + std::to_string(number) + ": not an absolute http(s) URI: " +
                           std::string(text),
                       number);
    uris.emplace_back(text);
  }
  return uris;
}

ManifestRecord process_uri(const std::string& uri, const Store& store, const RuleSet& rules,
                           const FetchPolicy& policy, bool strict_decode, HostRateLimiter& limiter,
                           std::string* failure) {
  ManifestRecord record{key_for_uri(uri), uri, 0, OutcomeClass::kOk};
  FetchOutcome outcome;
  try {
    outcome = resolve(uri, policy, rules, limiter);
  } catch (const RedirectLimit& e) {
    record.outcome = OutcomeClass::kRedirectLimit;
    if (failure)
      *failure = e.what();
    return record;
  } catch (const RedirectLoop& e) {
    record.outcome = OutcomeClass::kRedirectLimit;
    if (failure)
      *failure = e.what();
    return record;
  } catch (const FrameAmbiguous& e) {
    record.outcome = OutcomeClass::kRedirectLimit;
    if (failure)
      *failure = e.what();
    return record;
  } catch (const InvalidUri& e) {
    record.outcome = OutcomeClass::kRedirectLimit;
    if (failure)
      *failure = e.what();
    return record;
  } catch (const Error& e) {
    record.outcome = OutcomeClass::kNetworkError;
    if (failure)
      *failure = e.what();
    return record;
  }

  StoreEntry entry = make_entry(outcome);
  entry.meta.archive_id = match_archive(outcome.final_uri, rules).archive_id;
  if (outcome.status >= 200 && outcome.status <= 299)
    extract_into(entry, outcome, rules, strict_decode);
  store.put(entry);
  record.status = outcome.status;
  record.outcome = classify(entry);
  if (failure && record.outcome != OutcomeClass::kOk)
    *failure = std::string(to_string(record.outcome)) + " (status " + std::to_string(outcome.status) + ")";
  return record;
}

PipelineStats run_pipeline(const RunConfig& config, std::ostream& log) {
  if (config.workers < 1)
    throw std::invalid_argument("worker count must be at least 1");
  config.policy.validate();
  std::vector<std::string> uris = read_uri_list(config.input);
  RuleSet rules = load_rule_set(config.rules);
  Store store(config.store);
  try {
    fs::create_directories(config.store);
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  ManifestWriter manifest(store.manifest_path(), true);
  HostRateLimiter limiter;

  PipelineStats stats;
  stats.total = uris.size();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> fetched{0};
  std::atomic<std::size_t> skipped{0};
  std::mutex log_mutex;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      std::size_t index = next++;
      if (index >= uris.size())
        return;
      const std::string& uri = uris[index];
      try {
        ManifestRecord record;
        std::string failure;
        std::optional<StoreEntry> existing;
        try {
          existing = store.get(key_for_uri(uri));
        } catch (const CorruptEntry&) {
          existing.reset();  // refetch over a damaged entry
        }
        if (existing && classify(*existing) == OutcomeClass::kOk) {
          record = {existing->key, uri, existing->meta.status, OutcomeClass::kOk};
          ++skipped;
        } else {
          record = process_uri(uri, store, rules, config.policy, config.strict_decode, limiter, &failure);
          ++fetched;
        }
        manifest.append(record);
        if (!failure.empty()) {
          std::lock_guard lock(log_mutex);
          log << uri << ": " << failure << '\n';
        }
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!fatal)
          fatal = std::current_exception();
        next = uris.size();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  int count = std::min<int>(config.workers, std::max<std::size_t>(uris.size(), 1));
  for (int i = 0; i < count; ++i)
    threads.emplace_back(worker);
  for (auto& thread : threads)
    thread.join();
  if (fatal)
    std::rethrow_exception(fatal);

  stats.fetched = fetched;
  stats.skipped = skipped;
  return stats;
}

// --- Report --------------------------------------------------------------------

std::size_t Report::problematic() const {
  std::size_t ok = 0;
  if (auto it = classes.find(OutcomeClass::kOk); it != classes.end())
    ok = it->second;
  return total - ok;
}

double Report::problematic_percent() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(problematic()) / static_cast<double>(total);
}

Report compute_report(const std::vector<ManifestRecord>& records) {
  Report report;
  for (auto c : kAllOutcomeClasses)
    report.classes[c] = 0;
  for (const auto& record : records)
    ++report.classes[record.outcome];
  report.total = records.size();
  return report;
}

std::string format_percent(double percent) {
  char buffer[32];
  if (percent == static_cast<double>(static_cast<long long>(percent)))
    std::snprintf(buffer, sizeof buffer, "%lld%%", static_cast<long long>(percent));
  else
    std::snprintf(buffer, sizeof buffer, "%.2f%%", percent);
  return buffer;
}

std::string format_report_text(const Report& report) {
  std::ostringstream out;
  auto percent = [&](std::size_t n) {
    return format_percent(report.total ? 100.0 * static_cast<double>(n) / static_cast<double>(report.total) : 0.0);
  };
  out << std::left << std::setw(24) << "outcome-class" << std::right << std::setw(8) << "count" << std::setw(10)
      << "percent" << '\n';
  for (auto c : kAllOutcomeClasses) {
    std::size_t n = report.classes.count(c) ? report.classes.at(c) : 0;
    out << std::left << std::setw(24) << to_string(c) << std::right << std::setw(8) << n << std::setw(10)
        << percent(n) << '\n';
  }
  out << std::left << std::setw(24) << "total" << std::right << std::setw(8) << report.total << '\n';
  out << "problematic: " << report.problematic() << " of " << report.total << " ("
      << format_percent(report.problematic_percent()) << ")\n";
  return out.str();
}

std::string format_report_json(const Report& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  j["classes"] = nlohmann::ordered_json::object();
  for (auto c : kAllOutcomeClasses)
    j["classes"][std::string(to_string(c))] = report.classes.count(c) ? report.classes.at(c) : 0;
  return j.dump() + "\n";
}

// --- run_cli -------------------------------------------------------------------

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text))
    throw IoError("cannot write " + path.string());
}

// Text goes to `path` (or stdout when empty), JSON next to it.
void emit_report(const Report& report, const std::optional<fs::path>& path, const fs::path& store,
                 std::ostream& out) {
  std::string text = format_report_text(report);
  std::string json = format_report_json(report);
  if (path) {
    write_text_file(*path, text);
    fs::path json_path = *path;
    json_path.replace_extension(".json");
    if (json_path == *path)
      json_path += ".json";
    write_text_file(json_path, json);
  } else {
    out << text;
    write_text_file(store / "report.json", json);
  }
}

int cmd_fetch(const std::string& uri, const CommonFlags& flags, std::ostream& out) {
  RuleSet rules = load_rule_set(flags.rules ? std::optional<fs::path>(*flags.rules) : std::nullopt);
  FetchOutcome outcome = resolve(uri, flags.policy(), rules);
  print_chain(out, outcome);
  return 0;
}

int cmd_extract(const std::string& target, const std::optional<std::string>& store_root, const CommonFlags& flags,
                std::ostream& out) {
  RuleSet rules = load_rule_set(flags.rules ? std::optional<fs::path>(*flags.rules) : std::nullopt);
  std::optional<FetchOutcome> outcome;
  if (store_root) {
    Store store(*store_root);
    std::string key = is_store_key(target) ? target : key_for_uri(target);
    if (auto entry = store.get(key))
      outcome = outcome_from_entry(*entry);
    else if (is_store_key(target))
      throw Error("no entry " + key + " in store " + *store_root);
  } else if (is_store_key(target)) {
    throw Error("a store key needs --store");
  }
  if (!outcome)
    outcome = resolve(target, flags.policy(), rules);
  if (outcome->status < 200 || outcome->status > 299)
    throw Error(outcome->final_uri + ": final status " + std::to_string(outcome->status));

  ExtractionResult result = extract(*outcome, rules, {flags.strict_decode});
  out << result.text << '\n';
  for (const auto& d : result.diagnostics) {
    out << "# " << to_string(d.code);
    if (d.count)
      out << " count=" << *d.count;
    out << ": " << d.detail << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Acquire mementos from web archives and extract comparable text", "memharvest"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "memharvest 1.0");

  CommonFlags fetch_flags;
  std::string fetch_uri;
  auto* fetch = app.add_subcommand("fetch", "Resolve one URI and print its redirect chain");
  fetch->add_option("uri", fetch_uri, "Memento URI")->required();
  add_common_flags(fetch, fetch_flags);

  CommonFlags extract_flags;
  std::string extract_target;
  std::optional<std::string> extract_store;
  auto* extract_cmd = app.add_subcommand("extract", "Print the normalized text of a URI or stored entry");
  extract_cmd->add_option("target", extract_target, "Memento URI or store key")->required();
  extract_cmd->add_option("--store", extract_store, "Store to read the entry from");
  add_common_flags(extract_cmd, extract_flags);

  CommonFlags pipeline_flags;
  RunConfig config;
  std::string input;
  std::string store_root;
  std::optional<std::string> report_path;
  auto* pipeline = app.add_subcommand("pipeline", "Fetch and extract every URI of a list into a store");
  pipeline->add_option("--input", input, "File with one URI per line")->required();
  pipeline->add_option("--store", store_root, "Store directory")->required();
  pipeline->add_option("--workers", config.workers, "Concurrent workers")->check(CLI::Range(1, 256));
  pipeline->add_option("--report", report_path, "Write the outcome report here (JSON next to it)");
  add_common_flags(pipeline, pipeline_flags);

  std::string report_store;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "Outcome-class counts of the last pipeline run");
  report->add_option("--store", report_store, "Store directory")->required();
  report->add_option("--report", report_out, "Write the text report here (JSON next to it)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "memharvest 1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (!app.get_subcommands().empty())
      err << "run '" << app.get_subcommands().front()->get_name() << " --help' for the available flags\n";
    return 2;
  }

  try {
    if (fetch->parsed())
      return cmd_fetch(fetch_uri, fetch_flags, out);
    if (extract_cmd->parsed())
      return cmd_extract(extract_target, extract_store, extract_flags, out);
    if (pipeline->parsed()) {
      config.input = input;
      config.store = store_root;
      if (pipeline_flags.rules)
        config.rules = *pipeline_flags.rules;
      config.policy = pipeline_flags.policy();
      config.strict_decode = pipeline_flags.strict_decode;
      if (report_path)
        config.report = *report_path;
      PipelineStats stats = run_pipeline(config, err);
      out << "processed " << stats.total << " URIs: " << stats.fetched << " fetched, " << stats.skipped
          << " already in store\n";
      if (config.report)
        emit_report(compute_report(read_manifest(Store(config.store).manifest_path())), config.report,
                    config.store, out);
      return 0;
    }
    if (report->parsed()) {
      Store store(report_store);
      std::vector<ManifestRecord> records =
          fs::exists(store.manifest_path()) ? read_manifest(store.manifest_path()) : store.list();
      emit_report(compute_report(records),
                  report_out ? std::optional<fs::path>(*report_out) : std::nullopt, store.root(), out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace memharvest
