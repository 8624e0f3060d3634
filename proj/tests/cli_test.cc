#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "memharvest/cli.h"
#include "memharvest/error.h"
#include "memharvest/testkit.h"
#include "support/paths.h"

namespace memharvest {
namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(UriList, SkipsCommentsAndBlanks) {
  test::TempDir dir;
  std::ofstream(dir / "uris.txt") << "# header\n\n  http://a.org/x  \r\nhttps://b.org/\n\t\n";
  EXPECT_EQ(read_uri_list(dir / "uris.txt"), (std::vector<std::string>{"http://a.org/x", "https://b.org/"}));
}

TEST(UriList, EmptyFile) {
  test::TempDir dir;
  std::ofstream(dir / "uris.txt").flush();
  EXPECT_TRUE(read_uri_list(dir / "uris.txt").empty());
}

TEST(UriList, KeepsOrderAndDuplicates) {
  test::TempDir dir;
  std::ofstream(dir / "uris.txt") << "http://b.org/\n#c\n\nhttp://a.org/\nhttp://b.org/\n";
  EXPECT_EQ(read_uri_list(dir / "uris.txt"),
            (std::vector<std::string>{"http://b.org/", "http://a.org/", "http://b.org/"}));
}

TEST(UriList, ReportsBadLine) {
  test::TempDir dir;
  std::ofstream(dir / "uris.txt") << "http://a.org/\n\nnot-a-uri\n";
  try {
    read_uri_list(dir / "uris.txt");
    FAIL() << "expected InvalidUri";
  } catch (const InvalidUri& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("not-a-uri"), std::string::npos);
  }
  EXPECT_THROW(read_uri_list(dir / "missing.txt"), IoError);
}

TEST(ReportFormat, Percent) {
  EXPECT_EQ(format_percent(25.0), "25%");
  EXPECT_EQ(format_percent(0.0), "0%");
  EXPECT_EQ(format_percent(100.0), "100%");
  EXPECT_EQ(format_percent(100.0 / 3.0), "33.33%");
}

TEST(ReportFormat, Accounting) {
  std::vector<ManifestRecord> records = {
      {"k1", "u1", 200, OutcomeClass::kOk},
      {"k2", "u2", 200, OutcomeClass::kOk},
      {"k3", "u3", 410, OutcomeClass::kNetworkError},
      {"k4", "u4", 200, OutcomeClass::kNoscriptCorruption},
      {"k5", "u5", 0, OutcomeClass::kRedirectLimit},
  };
  Report r = compute_report(records);
  EXPECT_EQ(r.total, 5u);
  EXPECT_EQ(r.problematic(), 3u);
  EXPECT_DOUBLE_EQ(r.problematic_percent(), 60.0);
  EXPECT_EQ(r.classes.size(), kAllOutcomeClasses.size());
  EXPECT_EQ(r.classes[OutcomeClass::kUndecodable], 0u);
  EXPECT_EQ(format_report_json(r),
            R"({"total":5,"classes":{"ok":2,"redirect-limit":1,"network-error":1,"noscript-corruption":1,)"
            R"("undecodable":0,"unsupported-media-type":0}})"
            "\n");
  std::string text = format_report_text(r);
  EXPECT_NE(text.find("problematic: 3 of 5 (60%)"), std::string::npos) << text;
  EXPECT_NE(text.find("network-error"), std::string::npos);

  Report empty = compute_report({});
  EXPECT_EQ(empty.problematic_percent(), 0.0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"fetch"}).code, 2);
  EXPECT_EQ(run({"pipeline", "--input", "x"}).code, 2);
  EXPECT_EQ(run({"pipeline", "--input", "x", "--store", "y", "--workers", "0"}).code, 2);
  EXPECT_EQ(run({"fetch", "http://a.org/", "--rate", "0"}).code, 2);
  EXPECT_EQ(run({"report", "--store", "d", "--unknown"}).code, 2);
  CliRun bogus = run({"pipeline", "--input", "u.txt", "--store", "d", "--bogus"});
  EXPECT_EQ(bogus.code, 2);
  EXPECT_NE(bogus.err.find("--bogus"), std::string::npos) << bogus.err;
  CliRun help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("pipeline"), std::string::npos);
}

TEST(Cli, RuntimeErrors) {
  test::TempDir dir;
  CliRun missing_input = run({"pipeline", "--input", (dir / "none.txt").string(), "--store", (dir / "s").string()});
  EXPECT_EQ(missing_input.code, 1);
  EXPECT_NE(missing_input.err.find("none.txt"), std::string::npos);

  std::ofstream(dir / "uris.txt") << "http://a.org/\n";
  std::ofstream(dir / "rules.json") << "{ nope";
  EXPECT_EQ(run({"pipeline", "--input", (dir / "uris.txt").string(), "--store", (dir / "s").string(), "--rules",
                 (dir / "rules.json").string()})
                .code,
            1);
  EXPECT_EQ(run({"extract", key_for_uri("http://a.org/")}).code, 1);
}

class PipelineTest : public ::testing::Test {
 protected:
  PipelineTest() : server_(testkit::Scenario::load_file(test::scenario_path("pipeline.json"))) {}

  std::vector<std::string> network_flags() const {
    return {"--connect-to", server_.connect_to(), "--rate", "50", "--retry-backoff", "0.05", "--timeout", "5"};
  }

  testkit::Server server_;
  test::TempDir dir_;
};

TEST_F(PipelineTest, RunResumeAndReport) {
  RunConfig config;
  config.input = test::scenario_path("pipeline-uris.txt");
  config.store = dir_ / "store";
  config.policy.per_host_rate = 50;
  config.policy.retry_backoff_base = 0.05;
  config.policy.connect_to = {server_.connect_to()};
  config.workers = 3;

  std::ostringstream log;
  PipelineStats first = run_pipeline(config, log);
  EXPECT_EQ(first.total, 4u);
  EXPECT_EQ(first.fetched, 4u);
  EXPECT_EQ(first.skipped, 0u);
  EXPECT_NE(log.str().find("network-error"), std::string::npos) << log.str();

  Store store(config.store);
  auto records = read_manifest(store.manifest_path());
  ASSERT_EQ(records.size(), 4u);
  std::map<std::string, ManifestRecord> by_uri;
  for (const auto& r : records)
    by_uri[r.request_uri] = r;
  EXPECT_EQ(by_uri.at("http://archive.is/19961226114737/http://www.rsinc.com/").outcome, OutcomeClass::kNetworkError);
  EXPECT_EQ(by_uri.at("http://archive.is/19961226114737/http://www.rsinc.com/").status, 410);
  auto proni = by_uri.at("http://webarchive.proni.gov.uk/20111214024729/http://www.example.org/reading-room/faq.html");
  EXPECT_EQ(proni.outcome, OutcomeClass::kOk);

  auto entry = store.get(proni.key);
  ASSERT_TRUE(entry);
  EXPECT_EQ(entry->meta.archive_id, "proni");
  ASSERT_TRUE(entry->text);
  std::string golden = slurp(testkit::default_corpus_dir() / "expected/faq.txt");
  EXPECT_EQ(*entry->text, golden);

  Report report = compute_report(records);
  EXPECT_EQ(report.problematic(), 1u);
  EXPECT_EQ(format_percent(report.problematic_percent()), "25%");

  // Second run only retries what failed.
  std::size_t requests_before = server_.log().size();
  PipelineStats second = run_pipeline(config, log);
  EXPECT_EQ(second.fetched, 1u);
  EXPECT_EQ(second.skipped, 3u);
  EXPECT_EQ(server_.log().size(), requests_before + 1);
  EXPECT_EQ(read_manifest(store.manifest_path()).size(), 4u);
}

TEST_F(PipelineTest, CliEndToEnd) {
  std::vector<std::string> args = {"pipeline", "--input", test::scenario_path("pipeline-uris.txt").string(),
                                   "--store", (dir_ / "store").string(), "--workers", "2",
                                   "--report", (dir_ / "out" / "report.txt").string()};
  for (const auto& f : network_flags())
    args.push_back(f);
  CliRun pipeline = run(args);
  ASSERT_EQ(pipeline.code, 0) << pipeline.err;
  EXPECT_NE(pipeline.out.find("processed 4 URIs"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "out" / "report.txt").find("problematic: 1 of 4 (25%)"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "out" / "report.json").find("\"network-error\":1"), std::string::npos);

  CliRun report = run({"report", "--store", (dir_ / "store").string()});
  ASSERT_EQ(report.code, 0) << report.err;
  EXPECT_NE(report.out.find("problematic: 1 of 4 (25%)"), std::string::npos) << report.out;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "store" / "report.json"));

  // Without a manifest the report falls back to the entries themselves, which
  // only exist for URIs that produced a response.
  std::filesystem::remove(dir_ / "store" / "manifest.tsv");
  CliRun from_entries = run({"report", "--store", (dir_ / "store").string()});
  EXPECT_NE(from_entries.out.find("problematic: 1 of 4 (25%)"), std::string::npos) << from_entries.out;

  std::string uri = "http://web.archive.org/web/20081126132802/http://www.example.gov/news/2005/05-38.html";
  CliRun extract = run({"extract", key_for_uri(uri), "--store", (dir_ / "store").string()});
  ASSERT_EQ(extract.code, 0) << extract.err;
  EXPECT_EQ(extract.out, slurp(testkit::default_corpus_dir() / "expected/article.txt") + "\n");
}

TEST_F(PipelineTest, CliFetchAndExtractLive) {
  std::vector<std::string> args = {"fetch", "http://archive.is/19961226114737/http://www.rsinc.com/"};
  for (const auto& f : network_flags())
    args.push_back(f);
  CliRun fetch = run(args);
  ASSERT_EQ(fetch.code, 0) << fetch.err;
  EXPECT_NE(fetch.out.find("status 410"), std::string::npos) << fetch.out;

  args = {"extract", "http://webarchive.nationalarchives.gov.uk/20120405114247/http://www.example.com/recipes/creme-brulee.html"};
  for (const auto& f : network_flags())
    args.push_back(f);
  CliRun extract = run(args);
  ASSERT_EQ(extract.code, 0) << extract.err;
  EXPECT_NE(extract.out.find("# prefix-stripped"), std::string::npos) << extract.out;
  EXPECT_EQ(extract.out.rfind(slurp(testkit::default_corpus_dir() / "expected/recipe.txt") + "\n", 0), 0u);
}

// The store and manifest do not depend on the number of workers.
TEST(PipelineWorkers, OutputIndependentOfWorkerCount) {
  test::TempDir dir;
  auto run_with = [&](int workers) {
    testkit::Server server(testkit::Scenario::load_file(test::scenario_path("pipeline.json")));
    RunConfig config;
    config.input = test::scenario_path("pipeline-uris.txt");
    config.store = dir / ("store-" + std::to_string(workers));
    config.policy.per_host_rate = 50;
    config.policy.retry_backoff_base = 0.05;
    config.policy.connect_to = {server.connect_to()};
    config.workers = workers;
    std::ostringstream log;
    run_pipeline(config, log);
    return config.store;
  };
  Store one(run_with(1));
  Store many(run_with(4));

  auto sorted = [](std::vector<ManifestRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return records;
  };
  auto records = sorted(read_manifest(one.manifest_path()));
  EXPECT_EQ(records, sorted(read_manifest(many.manifest_path())));
  EXPECT_EQ(one.list(), many.list());
  for (const auto& record : records) {
    auto a = one.get(record.key);
    auto b = many.get(record.key);
    ASSERT_TRUE(a && b);
    b->meta.fetched_at = a->meta.fetched_at;
    // Header values such as Date may differ between runs.
    b->meta.headers = a->meta.headers;
    EXPECT_EQ(*a, *b) << record.request_uri;
  }
}

}  // namespace
}  // namespace memharvest
