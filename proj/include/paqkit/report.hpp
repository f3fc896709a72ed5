#pragma once

#include <map>
#include <string>
#include <vector>

#include "paqkit/stats.hpp"

namespace paqkit {

/// Rendering unit for one (measure, listening test) pair.
struct ReportCell {
    std::string test_id;
    bool available = false;  // at least 3 valid pairs existed
    bool excluded = false;   // dagger: kept visible, dropped from aggregation
    CorrelationCell stats;
};

struct ReportRow {
    std::string measure;
    std::vector<ReportCell> cells;  // in report test order
    AggregatedScore aggregate;
    /// Nearest measure ranked below this one whose aggregated rho differs
    /// significantly; empty when there is none.
    std::string partner;
};

struct CorrelationReport {
    std::vector<std::string> test_ids;
    std::vector<ReportRow> rows;  // rho_bar desc, then tau_prime_bar desc, then name
    double alpha = 0.05;
    std::string variance_model = "sum(1/(n_i-3))/k^2";
    std::string software_version;
};

/// Aggregates, ranks and links the rows. Cells arrive pre-marked with their
/// exclusion flag; unavailable cells (n < 3) are skipped in aggregation and
/// reported via `warnings`, one line each. A row whose cells are all
/// unavailable is dropped entirely (also warned).
CorrelationReport build_report(const std::vector<std::string>& test_ids,
                               const std::map<std::string, std::vector<ReportCell>>& cells,
                               std::vector<std::string>* warnings = nullptr);

/// Correlation as an integer percent of 1 (0.937 -> 94), rounding half away
/// from zero.
int percent_of_unit(double coefficient);

/// Machine-readable rendering: '#'-prefixed header lines (alpha, variance
/// model, version), one long-format row per cell, one aggregate row per
/// measure.
std::string render_report_csv(const CorrelationReport& report);

/// Human rendering in the style of published correlation tables: one row
/// per measure, "<rho> <tau'>" percent cells with significance asterisks,
/// dagger marks for excluded cells, and A/B columns pairing measures whose
/// aggregated scores differ significantly.
std::string render_report_markdown(const CorrelationReport& report);

}
