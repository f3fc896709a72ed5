#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "paqkit/manifest.hpp"
#include "paqkit/report.hpp"
#include "paqkit/run_config.hpp"

namespace paqkit {

/// One measure value for one graded stimulus; the long-format interchange
/// row between the measure and correlate stages.
struct ResultRow {
    std::string test_id;
    std::string item_id;
    std::string condition_id;
    std::string measure;
    double value = 0.0;
    bool valid = false;
    std::string note;
};

/// Evaluates every registered measure on every manifest item with a bounded
/// worker pool. Relative manifest paths resolve against `manifest_dir`. An
/// unreadable item yields invalid rows for all its measures; the run
/// continues. Rows come back sorted by (test_id, item_id, condition_id,
/// measure), so the output is independent of scheduling.
std::vector<ResultRow> run_measures(const Manifest& manifest, const RunConfig& config,
                                    const std::filesystem::path& manifest_dir);

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

std::vector<ResultRow> load_results_csv(const std::filesystem::path& path);

/// Joins result rows with manifest scores and builds the ranked report.
/// Cells with fewer than 3 valid pairs are marked unavailable; rows naming
/// unknown manifest items are skipped; both are reported via `warnings`.
CorrelationReport correlate_results(const std::vector<ResultRow>& rows, const Manifest& manifest,
                                    std::vector<std::string>* warnings = nullptr);

}
