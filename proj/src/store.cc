#include "memharvest/store.h"

#include <openssl/evp.h>
#include <stdio.h>
#include <time.h>

#include <fcntl.h>

#include <algorithm>
#include <stdexcept>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "memharvest/error.h"

namespace memharvest {
namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out)
    throw IoError("short write to " + path.string());
}

std::string temp_suffix() {
  static std::atomic<unsigned long> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream s;
  s << std::hex << rng() << '-' << counter++;
  return s.str();
}

}  // namespace

std::string key_for_uri(std::string_view uri) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(uri.data(), uri.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string key;
  key.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    key.push_back(kHex[digest[i] >> 4]);
    key.push_back(kHex[digest[i] & 0xF]);
  }
  return key;
}

bool is_store_key(std::string_view text) {
  if (text.size() != 64)
    return false;
  for (char c : text)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
      return false;
  return true;
}

std::string_view to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::kOk: return "ok";
    case OutcomeClass::kRedirectLimit: return "redirect-limit";
    case OutcomeClass::kNetworkError: return "network-error";
    case OutcomeClass::kNoscriptCorruption: return "noscript-corruption";
    case OutcomeClass::kUndecodable: return "undecodable";
    case OutcomeClass::kUnsupportedMediaType: return "unsupported-media-type";
  }
  return "ok";
}

std::optional<OutcomeClass> outcome_class_from_string(std::string_view text) {
  for (auto c : kAllOutcomeClasses)
    if (to_string(c) == text)
      return c;
  return std::nullopt;
}

StoreEntry make_entry(const FetchOutcome& outcome) {
  StoreEntry entry;
  entry.key = key_for_uri(outcome.request_uri);
  entry.meta.request_uri = outcome.request_uri;
  entry.meta.final_uri = outcome.final_uri;
  entry.meta.status = outcome.status;
  entry.meta.fetched_at = std::chrono::floor<std::chrono::seconds>(outcome.fetched_at);
  entry.meta.chain = outcome.chain;
  entry.meta.headers = outcome.headers;
  entry.raw = outcome.body;
  return entry;
}

OutcomeClass classify(const StoreEntry& entry) {
  if (entry.meta.status < 200 || entry.meta.status > 299)
    return OutcomeClass::kNetworkError;
  auto has = [&](DiagnosticCode code) {
    for (const auto& d : entry.diagnostics)
      if (d.code == code)
        return true;
    return false;
  };
  if (has(DiagnosticCode::kNoscriptCorruption))
    return OutcomeClass::kNoscriptCorruption;
  if (has(DiagnosticCode::kUnsupportedMediaType))
    return OutcomeClass::kUnsupportedMediaType;
  if (has(DiagnosticCode::kCharsetUndecodable))
    return OutcomeClass::kUndecodable;
  return OutcomeClass::kOk;
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
  std::time_t seconds = std::chrono::system_clock::to_time_t(std::chrono::floor<std::chrono::seconds>(t));
  std::tm tm{};
  gmtime_r(&seconds, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::optional<std::chrono::system_clock::time_point> parse_timestamp(std::string_view text) {
  std::tm tm{};
  std::string s(text);
  const char* end = strptime(s.c_str(), "%Y-%m-%dT%H:%M:%S", &tm);
  if (!end)
    return std::nullopt;
  std::chrono::nanoseconds fraction{0};
  if (*end == '.') {
    ++end;
    long long scale = 100000000;
    if (!(*end >= '0' && *end <= '9'))
      return std::nullopt;
    for (; *end >= '0' && *end <= '9'; ++end, scale /= 10)
      fraction += std::chrono::nanoseconds((*end - '0') * scale);
  }
  if (std::strcmp(end, "Z") != 0)
    return std::nullopt;
  std::time_t seconds = timegm(&tm);
  return std::chrono::time_point_cast<std::chrono::system_clock::duration>(
      std::chrono::system_clock::from_time_t(seconds) + fraction);
}

std::string meta_to_json(const EntryMeta& meta) {
  Json j;
  j["request_uri"] = meta.request_uri;
  j["final_uri"] = meta.final_uri;
  j["status"] = meta.status;
  j["fetched_at"] = format_timestamp(meta.fetched_at);
  j["chain"] = Json::array();
  for (const auto& step : meta.chain) {
    Json s;
    s["kind"] = to_string(step.kind);
    s["from"] = step.from_uri;
    s["to"] = step.to_uri;
    s["status"] = step.status ? Json(*step.status) : Json(nullptr);
    s["delay"] = step.delay ? Json(*step.delay) : Json(nullptr);
    j["chain"].push_back(std::move(s));
  }
  j["headers"] = Json::array();
  for (const auto& [name, value] : meta.headers)
    j["headers"].push_back(Json::array({name, value}));
  j["archive_id"] = meta.archive_id;
  // Header values are not guaranteed UTF-8; invalid bytes become U+FFFD
  // instead of failing the whole entry.
  return j.dump(2, ' ', false, Json::error_handler_t::replace);
}

EntryMeta meta_from_json(std::string_view json) {
  Json j;
  try {
    j = Json::parse(json);
  } catch (const Json::parse_error& e) {
    throw CorruptEntry(std::string("meta.json: ") + e.what());
  }
  try {
    EntryMeta meta;
    meta.request_uri = j.at("request_uri").get<std::string>();
    meta.final_uri = j.at("final_uri").get<std::string>();
    meta.status = j.at("status").get<int>();
    auto fetched = parse_timestamp(j.at("fetched_at").get<std::string>());
    if (!fetched)
      throw CorruptEntry("meta.json: bad fetched_at");
    meta.fetched_at = *fetched;
    for (const auto& s : j.at("chain")) {
      auto kind = redirect_kind_from_string(s.at("kind").get<std::string>());
      if (!kind)
        throw CorruptEntry("meta.json: unknown redirect kind");
      RedirectStep step{*kind, s.at("from").get<std::string>(), s.at("to").get<std::string>(), std::nullopt,
                        std::nullopt};
      if (!s.at("status").is_null())
        step.status = s.at("status").get<int>();
      if (!s.at("delay").is_null())
        step.delay = s.at("delay").get<double>();
      meta.chain.push_back(std::move(step));
    }
    for (const auto& h : j.at("headers")) {
      if (!h.is_array() || h.size() != 2)
        throw CorruptEntry("meta.json: header is not a name/value pair");
      meta.headers.emplace_back(h[0].get<std::string>(), h[1].get<std::string>());
    }
    meta.archive_id = j.at("archive_id").get<std::string>();
    return meta;
  } catch (const Json::exception& e) {
    throw CorruptEntry(std::string("meta.json: ") + e.what());
  }
}

// --- Store -----------------------------------------------------------------

Store::Store(fs::path root) : root_(std::move(root)) {}

fs::path Store::entry_dir(std::string_view key) const {
  return root_ / std::string(key.substr(0, 2)) / std::string(key);
}

void Store::put(const StoreEntry& entry) const {
  if (!is_store_key(entry.key) || key_for_uri(entry.meta.request_uri) != entry.key)
    throw std::invalid_argument("store entry key does not match its request URI");
  fs::path target = entry_dir(entry.key);
  fs::path parent = target.parent_path();
  fs::path temp = parent / ("." + entry.key + ".tmp-" + temp_suffix());
  try {
    fs::create_directories(parent);
    fs::create_directory(temp);
    write_file(temp / "raw.bin", entry.raw);
    write_file(temp / "meta.json", meta_to_json(entry.meta));
    if (entry.text)
      write_file(temp / "text.txt", *entry.text);
    write_file(temp / "diagnostics.json", diagnostics_to_json(entry.diagnostics));

    if (::rename(temp.c_str(), target.c_str()) != 0) {
      if (errno != ENOTEMPTY && errno != EEXIST)
        throw IoError("rename " + temp.string() + ": " + std::strerror(errno));
      // Swap the new directory in atomically, then discard the old one.
      if (::renameat2(AT_FDCWD, temp.c_str(), AT_FDCWD, target.c_str(), RENAME_EXCHANGE) != 0)
        throw IoError("exchange " + target.string() + ": " + std::strerror(errno));
    }
    std::error_code ignored;
    fs::remove_all(temp, ignored);
  } catch (const fs::filesystem_error& e) {
    std::error_code ignored;
    fs::remove_all(temp, ignored);
    throw IoError(e.what());
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(temp, ignored);
    throw;
  }
}

std::optional<StoreEntry> Store::get(std::string_view key) const {
  if (!is_store_key(key))
    return std::nullopt;
  fs::path dir = entry_dir(key);
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    return std::nullopt;
  if (!fs::exists(dir / "meta.json") || !fs::exists(dir / "raw.bin") || !fs::exists(dir / "diagnostics.json"))
    throw CorruptEntry(dir.string() + ": incomplete entry");

  StoreEntry entry;
  entry.key = std::string(key);
  entry.meta = meta_from_json(read_file(dir / "meta.json"));
  if (key_for_uri(entry.meta.request_uri) != key)
    throw CorruptEntry(dir.string() + ": request_uri does not hash to the entry key");
  entry.raw = read_file(dir / "raw.bin");
  if (fs::exists(dir / "text.txt"))
    entry.text = read_file(dir / "text.txt");
  try {
    entry.diagnostics = diagnostics_from_json(read_file(dir / "diagnostics.json"));
  } catch (const ParseError& e) {
    throw CorruptEntry(dir.string() + ": " + e.what());
  }
  return entry;
}

std::vector<ManifestRecord> Store::list() const {
  std::vector<ManifestRecord> records;
  std::error_code ec;
  if (!fs::is_directory(root_, ec))
    return records;
  for (const auto& fan : fs::directory_iterator(root_)) {
    if (!fan.is_directory() || fan.path().filename().string().size() != 2)
      continue;
    for (const auto& dir : fs::directory_iterator(fan.path())) {
      std::string key = dir.path().filename().string();
      if (!dir.is_directory() || !is_store_key(key))
        continue;  // skips ".<key>.tmp-*" leftovers of interrupted puts
      StoreEntry light;
      light.key = key;
      light.meta = meta_from_json(read_file(dir.path() / "meta.json"));
      try {
        light.diagnostics = diagnostics_from_json(read_file(dir.path() / "diagnostics.json"));
      } catch (const ParseError& e) {
        throw CorruptEntry(dir.path().string() + ": " + e.what());
      }
      records.push_back({key, light.meta.request_uri, light.meta.status, classify(light)});
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return records;
}

// --- Manifest --------------------------------------------------------------

std::string format_manifest_record(const ManifestRecord& record) {
  std::string uri = record.request_uri;
  for (char& c : uri)
    if (c == '\t' || c == '\n' || c == '\r')
      c = ' ';
  return record.key + '\t' + uri + '\t' + std::to_string(record.status) + '\t' +
         std::string(to_string(record.outcome)) + '\n';
}

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::vector<ManifestRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty())
      continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    auto outcome = fields.size() == 4 ? outcome_class_from_string(fields[3]) : std::nullopt;
    if (!outcome || !is_store_key(fields[0]))
      throw CorruptEntry(path.string() + ": malformed record on line " + std::to_string(number));
    int status = 0;
    try {
      status = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw CorruptEntry(path.string() + ": bad status on line " + std::to_string(number));
    }
    records.push_back({fields[0], fields[1], status, *outcome});
  }
  return records;
}

ManifestWriter::ManifestWriter(const fs::path& path, bool truncate) : path_(path) {
  std::error_code ec;
  if (path.has_parent_path())
    fs::create_directories(path.parent_path(), ec);
  out_.open(path, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
  if (!out_)
    throw IoError("cannot open " + path.string());
}

void ManifestWriter::append(const ManifestRecord& record) {
  std::lock_guard lock(mutex_);
  out_ << format_manifest_record(record);
  out_.flush();
  if (!out_)
    throw IoError("write to " + path_.string() + " failed");
}

}  // namespace memharvest
