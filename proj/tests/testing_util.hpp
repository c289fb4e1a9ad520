#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

namespace testutil {

inline std::string require_env(const char* name) {
  const char* value = std::getenv(name);
  if (!value || !*value) throw std::runtime_error(std::string("missing env var ") + name);
  return value;
}

inline std::string cli_path() { return require_env("XNCAPS_CLI"); }

inline std::string source_dir() { return require_env("XNCAPS_SOURCE_DIR"); }

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs `argv_line` (already shell-quoted by the caller) and captures stdout,
// stderr, and the exit code.
inline RunResult run_command(const std::string& argv_line) {
  namespace fs = std::filesystem;
  static std::mt19937_64 gen(std::random_device{}());
  const fs::path err_file =
      fs::temp_directory_path() / ("xncaps_stderr_" + std::to_string(gen()) + ".txt");

  RunResult result;
  const std::string full = argv_line + " 2>" + err_file.string();
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + full);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), got);
  const int status = pclose(pipe);
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else
    result.exit_code = -1;

  std::ifstream err_in(err_file);
  result.err.assign(std::istreambuf_iterator<char>(err_in), std::istreambuf_iterator<char>());
  fs::remove(err_file);
  return result;
}

class TempDir {
 public:
  TempDir() {
    namespace fs = std::filesystem;
    static std::mt19937_64 gen(std::random_device{}());
    path_ = fs::temp_directory_path() / ("xncaps_test_" + std::to_string(gen()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string quoted(const std::string& s) { return "'" + s + "'"; }

}  // namespace testutil
