#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "fairsel/data_model.hpp"

namespace support {

// Groups given as labels in score order; scores descend within each group and
// ids are "<group><index>".
inline fairsel::Cohort labels_cohort(std::initializer_list<std::pair<std::string, std::vector<int>>> groups) {
  fairsel::Cohort c;
  c.attributes = {"g"};
  for (const auto& [name, labels] : groups) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      fairsel::ScoredExample e;
      e.entity_id = name + std::to_string(i);
      e.score = 1.0 - static_cast<double>(i + 1) / static_cast<double>(labels.size() + 1);
      e.label = labels[i];
      e.group_values = {name};
      c.examples.push_back(std::move(e));
    }
  }
  fairsel::summarize(c);
  return c;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fairsel-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return std::string(FAIRSEL_FIXTURE_DIR) + "/" + name; }

}  // namespace support
