#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paqkit/error.hpp"

namespace paqkit {

/// One graded stimulus: a signal under test, the reference it was graded
/// against, any competing source references, and the listening-test score.
struct ManifestItem {
    std::string item_id;
    std::string condition_id;
    std::string test_path;
    std::string ref_target_path;
    std::vector<std::string> other_ref_paths;
    double score_mean = 0.0;
    std::optional<int> n_ratings;

    std::string key() const { return item_id + "/" + condition_id; }
};

struct TestManifest {
    std::string test_id;
    std::vector<ManifestItem> items;
    /// measure name -> true marks the measure as excluded for this test.
    std::map<std::string, bool> exclusions;
};

struct Manifest {
    std::vector<TestManifest> tests;
};

/// Parses a manifest from JSON text. Errors carry the line number for
/// syntax problems and the JSON path for semantic ones.
Manifest parse_manifest_json(const std::string& text, const std::string& origin = "manifest");

std::string manifest_to_json(const Manifest& manifest);

/// Loads a manifest from disk; the format is picked by extension
/// (.json, or .csv for the flat one-row-per-item table).
Manifest load_manifest(const std::filesystem::path& path);

}
