#include "paqkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "paqkit/csv.hpp"
#include "paqkit/version.hpp"

namespace paqkit {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string markdown_cell(const ReportCell& cell) {
    if (!cell.available) return "n/a";
    std::string out = std::to_string(percent_of_unit(std::abs(cell.stats.rho)));
    if (cell.stats.rho_significant) out += '*';
    out += ' ';
    out += std::to_string(percent_of_unit(std::abs(cell.stats.tau_pr)));
    if (cell.stats.tau_significant) out += '*';
    if (cell.excluded) out += " \xE2\x80\xA0";  // dagger
    return out;
}

/// Symbols for the A/B significant-difference pairing, a..z then aa, ab, ...
std::string pair_symbol(std::size_t index) {
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('a' + index % 26));
        index = index / 26;
    } while (index-- > 0);
    return s;
}

}  // namespace

int percent_of_unit(double coefficient) {
    return static_cast<int>(std::llround(coefficient * 100.0));
}

CorrelationReport build_report(const std::vector<std::string>& test_ids,
                               const std::map<std::string, std::vector<ReportCell>>& cells,
                               std::vector<std::string>* warnings) {
    const auto warn = [&](const std::string& message) {
        if (warnings) warnings->push_back(message);
    };

    CorrelationReport report;
    report.test_ids = test_ids;
    report.software_version = version_string;

    for (const auto& [measure, measure_cells] : cells) {
        ReportRow row;
        row.measure = measure;
        // Reorder into report test order, padding gaps with unavailable cells.
        for (const auto& test_id : test_ids) {
            const auto it =
                std::find_if(measure_cells.begin(), measure_cells.end(),
                             [&](const ReportCell& c) { return c.test_id == test_id; });
            if (it != measure_cells.end()) {
                row.cells.push_back(*it);
            } else {
                ReportCell missing;
                missing.test_id = test_id;
                row.cells.push_back(missing);
            }
        }

        std::vector<CorrelationCell> for_aggregate;
        std::vector<std::string> excluded;
        for (const auto& cell : row.cells) {
            if (!cell.available) {
                warn("measure " + measure + ": no usable cell for test " + cell.test_id);
                continue;
            }
            for_aggregate.push_back(cell.stats);
            if (cell.excluded) excluded.push_back(cell.test_id);
        }
        if (for_aggregate.empty() ||
            static_cast<int>(excluded.size()) == static_cast<int>(for_aggregate.size())) {
            warn("measure " + measure + ": nothing to aggregate, row dropped");
            continue;
        }
        row.aggregate = aggregate(for_aggregate, excluded);
        report.rows.push_back(std::move(row));
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.aggregate.rho_bar != b.aggregate.rho_bar)
            return a.aggregate.rho_bar > b.aggregate.rho_bar;
        if (a.aggregate.tau_prime_bar != b.aggregate.tau_prime_bar)
            return a.aggregate.tau_prime_bar > b.aggregate.tau_prime_bar;
        return a.measure < b.measure;
    });

    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        for (std::size_t j = i + 1; j < report.rows.size(); ++j) {
            if (aggregate_diff_significant(report.rows[i].aggregate, report.rows[j].aggregate)) {
                report.rows[i].partner = report.rows[j].measure;
                break;
            }
        }
    }
    return report;
}

std::string render_report_csv(const CorrelationReport& report) {
    std::ostringstream out;
    out << "# alpha=" << format_double(report.alpha) << "\n";
    out << "# variance_model=" << report.variance_model << "\n";
    out << "# version=" << report.software_version << "\n";
    out << "measure,test_id,kind,n,rho,tau,tau_prime,rho_significant,tau_significant,"
           "excluded,degenerate,available,partner\n";
    for (const auto& row : report.rows) {
        for (const auto& cell : row.cells) {
            out << csv_escape(row.measure) << ',' << csv_escape(cell.test_id) << ",cell,";
            if (cell.available) {
                out << cell.stats.n << ',' << format_double(cell.stats.rho) << ','
                    << format_double(cell.stats.tau) << ',' << format_double(cell.stats.tau_pr)
                    << ',' << (cell.stats.rho_significant ? "true" : "false") << ','
                    << (cell.stats.tau_significant ? "true" : "false") << ','
                    << (cell.excluded ? "true" : "false") << ','
                    << (cell.stats.degenerate ? "true" : "false") << ",true,\n";
            } else {
                out << ",,,,,,,,false,\n";
            }
        }
        out << csv_escape(row.measure) << ",,aggregate," << row.aggregate.cell_count << ','
            << format_double(row.aggregate.rho_bar) << ",,"
            << format_double(row.aggregate.tau_prime_bar) << ",,,,,true,"
            << csv_escape(row.partner) << "\n";
    }
    return out.str();
}

std::string render_report_markdown(const CorrelationReport& report) {
    std::ostringstream out;
    out << "# Correlation report\n\n";
    out << "alpha = " << format_double(report.alpha) << "; variance model = "
        << report.variance_model << "; paqkit " << report.software_version << "\n\n";
    out << "Cells show Pearson rho and tau' as percent of 1 (94 means 0.94); `*` marks\n"
           "significance at alpha, \xE2\x80\xA0 marks cells excluded from the aggregate. Column A\n"
           "pairs a measure with the first lower-ranked measure (symbol in column B)\n"
           "whose aggregated rho differs significantly.\n\n";

    // Assign pairing symbols in rank order.
    std::vector<std::string> a_marks(report.rows.size()), b_marks(report.rows.size());
    std::size_t next_symbol = 0;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (report.rows[i].partner.empty()) continue;
        const auto j = static_cast<std::size_t>(
            std::find_if(report.rows.begin(), report.rows.end(),
                         [&](const ReportRow& r) { return r.measure == report.rows[i].partner; }) -
            report.rows.begin());
        const std::string symbol = pair_symbol(next_symbol++);
        a_marks[i] = symbol;
        if (!b_marks[j].empty()) b_marks[j] += ',';
        b_marks[j] += symbol;
    }

    out << "| # | Measure |";
    for (const auto& test_id : report.test_ids) out << ' ' << test_id << " |";
    out << " Aggregated | A | B |\n";
    out << "|---|---------|";
    for (std::size_t i = 0; i < report.test_ids.size(); ++i) out << "---|";
    out << "---|---|---|\n";

    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        out << "| " << (i + 1) << " | " << row.measure << " |";
        for (const auto& cell : row.cells) out << ' ' << markdown_cell(cell) << " |";
        out << ' ' << percent_of_unit(row.aggregate.rho_bar) << ' '
            << percent_of_unit(row.aggregate.tau_prime_bar) << " | " << a_marks[i] << " | "
            << b_marks[i] << " |\n";
    }
    return out.str();
}

}
