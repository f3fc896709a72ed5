#pragma once

#include <string>
#include <vector>

namespace paqkit {

struct SubprocessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
};

/// Runs `exec` with `args`, captures both output streams and kills the
/// process once `timeout_sec` elapses. Throws Error when the process
/// cannot be spawned at all.
SubprocessResult run_subprocess(const std::string& exec, const std::vector<std::string>& args,
                                double timeout_sec);

}
