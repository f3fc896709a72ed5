#pragma once

#include <filesystem>

#include "paqkit/quality.hpp"

namespace paqkit {

/// Batch run settings plus the measures they name, built from a JSON
/// config file. Relative paths inside the config resolve against the
/// config file's directory.
struct RunConfig {
    int target_rate = 48000;      // batch signals are resampled to this rate first
    int parallelism = 0;          // worker threads; 0 picks hardware concurrency
    int adapter_concurrency = 0;  // concurrent external tools; 0 picks hardware concurrency
    long seed = 0;                // reserved for randomized fixtures; unused by measures
    MeasureRegistry registry;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Same, from already-parsed text; `config_dir` anchors relative paths.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& config_dir,
                           const std::string& origin = "config");

}
