#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#ifndef MEMHARVEST_TEST_DATA_DIR
#define MEMHARVEST_TEST_DATA_DIR "tests"
#endif

namespace memharvest::test {

inline std::filesystem::path data_dir() {
  return MEMHARVEST_TEST_DATA_DIR;
}

inline std::filesystem::path scenario_path(const std::string& name) {
  return data_dir() / "scenarios" / name;
}

// Directory removed again when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("memharvest-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace memharvest::test
