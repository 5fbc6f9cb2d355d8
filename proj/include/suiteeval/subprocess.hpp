#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace suiteeval {

struct ProcessResult {
  int exit_status = 0;     // exit code, or 128 + signal number
  bool signaled = false;
  std::string stdout_data;
  std::string stderr_data;
};

// Runs argv[0] (looked up on PATH) with `input` on standard input, collecting
// standard output and standard error. Input is written while output is read
// so large payloads cannot deadlock on full pipes. Throws IoError if the
// process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input);

}  // namespace suiteeval
