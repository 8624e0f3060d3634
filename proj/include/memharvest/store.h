#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memharvest/acquisition.h"
#include "memharvest/textify.h"

namespace memharvest {

// Lowercase hex SHA-256 of the exact URI bytes.
std::string key_for_uri(std::string_view uri);
bool is_store_key(std::string_view text);

enum class OutcomeClass { kOk, kRedirectLimit, kNetworkError, kNoscriptCorruption, kUndecodable, kUnsupportedMediaType };

std::string_view to_string(OutcomeClass c);
std::optional<OutcomeClass> outcome_class_from_string(std::string_view text);
inline constexpr std::array kAllOutcomeClasses = {
    OutcomeClass::kOk,          OutcomeClass::kRedirectLimit, OutcomeClass::kNetworkError,
    OutcomeClass::kNoscriptCorruption, OutcomeClass::kUndecodable, OutcomeClass::kUnsupportedMediaType};

struct EntryMeta {
  std::string request_uri;
  std::string final_uri;
  int status = 0;
  std::chrono::system_clock::time_point fetched_at;  // whole seconds survive a round trip
  std::vector<RedirectStep> chain;
  HeaderList headers;
  std::string archive_id;

  friend bool operator==(const EntryMeta&, const EntryMeta&) = default;
};

struct StoreEntry {
  std::string key;
  EntryMeta meta;
  std::string raw;
  std::optional<std::string> text;
  std::vector<Diagnostic> diagnostics;

  friend bool operator==(const StoreEntry&, const StoreEntry&) = default;
};

StoreEntry make_entry(const FetchOutcome& outcome);

// Non-2xx status is network-error; otherwise the first of noscript-corruption,
// unsupported-media-type, charset-undecodable found in the diagnostics;
// otherwise ok.
OutcomeClass classify(const StoreEntry& entry);

// "2016-01-01T00:00:00Z". Parsing also accepts fractional seconds.
std::string format_timestamp(std::chrono::system_clock::time_point t);
std::optional<std::chrono::system_clock::time_point> parse_timestamp(std::string_view text);

std::string meta_to_json(const EntryMeta& meta);
// Throws CorruptEntry.
EntryMeta meta_from_json(std::string_view json);

struct ManifestRecord {
  std::string key;
  std::string request_uri;
  int status = 0;  // 0 when no final response was received
  OutcomeClass outcome = OutcomeClass::kOk;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// Entry directories live at <root>/<first two hex>/<key>/ holding raw.bin,
// meta.json, text.txt (only when text exists) and diagnostics.json.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path entry_dir(std::string_view key) const;

  // Atomic per entry: the directory is assembled under a temporary name and
  // renamed into place. Throws IoError, or std::invalid_argument when the
  // key is not the hash of meta.request_uri.
  void put(const StoreEntry& entry) const;
  // nullopt when absent. Throws CorruptEntry or IoError.
  std::optional<StoreEntry> get(std::string_view key) const;
  // One record per entry, read from meta.json and diagnostics.json only,
  // ordered by key.
  std::vector<ManifestRecord> list() const;

  std::filesystem::path manifest_path() const { return root_ / "manifest.tsv"; }

 private:
  std::filesystem::path root_;
};

// Tab-separated key, request_uri, status, outcome-class; LF-terminated.
std::string format_manifest_record(const ManifestRecord& record);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// Single serialized writer; each append is flushed.
class ManifestWriter {
 public:
  // truncate=false appends to an existing file.
  ManifestWriter(const std::filesystem::path& path, bool truncate);
  void append(const ManifestRecord& record);

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace memharvest
