#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return IDIOMFORGE_SOURCE_DIR; }
inline fs::path data_dir() { return source_dir() / "tests" / "data"; }
inline fs::path demo_dir() { return source_dir() / "demo"; }
inline std::string cli_path() { return IDIOMFORGE_CLI; }

inline nlohmann::json load_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("idiomforge-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Runs the CLI with `args`, returning its exit status.
inline int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = "\"" + cli_path() + "\" " + args;
  cmd += log.empty() ? " >/dev/null 2>&1" : " >\"" + log.string() + "\" 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Every regular file under `dir` except the excluded names, keyed by
/// relative path.
inline std::map<std::string, std::string> snapshot(const fs::path& dir,
                                                   const std::set<std::string>& exclude = {"run.log",
                                                                                           "cache"}) {
  std::map<std::string, std::string> out;
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it) {
    auto rel = fs::relative(it->path(), dir);
    if (exclude.count(rel.begin()->string())) {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) out[rel.string()] = slurp(it->path());
  }
  return out;
}

/// Reads an integer counter such as "provider_calls: 30" from a run log.
inline long run_log_counter(const fs::path& log, const std::string& name) {
  std::istringstream in(slurp(log));
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find(name + ":");
    if (pos != std::string::npos && line.find_first_not_of(' ') == pos) {
      return std::stol(line.substr(pos + name.size() + 1));
    }
  }
  return -1;
}

}  // namespace testsupport
