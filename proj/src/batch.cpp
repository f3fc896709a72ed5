#include "paqkit/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "paqkit/csv.hpp"
#include "paqkit/resample.hpp"
#include "paqkit/wav.hpp"

namespace paqkit {

namespace {

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

std::filesystem::path temp_dir_from_env() {
    if (const char* dir = std::getenv("PAQKIT_TMPDIR"); dir != nullptr && *dir != '\0')
        return std::filesystem::path(dir);
    return {};
}

struct FlatItem {
    const TestManifest* test;
    const ManifestItem* item;
};

std::vector<ResultRow> evaluate_item(const FlatItem& flat, const RunConfig& config,
                                     const std::filesystem::path& manifest_dir,
                                     const std::filesystem::path& temp_dir) {
    const auto& item = *flat.item;
    std::vector<ResultRow> rows;
    const auto names = config.registry.names();
    rows.reserve(names.size());
    for (const auto& name : names)
        rows.push_back({flat.test->test_id, item.item_id, item.condition_id, name,
                        std::numeric_limits<double>::quiet_NaN(), false, ""});

    AudioSignal test_signal, target_signal;
    std::vector<AudioSignal> others;
    try {
        test_signal = resample(load_wav(resolve(item.test_path, manifest_dir)),
                               config.target_rate);
        target_signal = resample(load_wav(resolve(item.ref_target_path, manifest_dir)),
                                 config.target_rate);
        for (const auto& path : item.other_ref_paths)
            others.push_back(resample(load_wav(resolve(path, manifest_dir)),
                                      config.target_rate));
    } catch (const std::exception& e) {
        for (auto& row : rows) row.note = e.what();
        return rows;
    }

    const SourceSet sources{target_signal, others};
    DecompositionCache cache;
    EvalContext ctx;
    ctx.item_id = flat.test->test_id + "/" + item.key();
    ctx.temp_dir = temp_dir;
    ctx.cache = &cache;

    for (std::size_t i = 0; i < names.size(); ++i) {
        const MeasureResult result =
            evaluate(config.registry.require(names[i]), target_signal, test_signal, &sources, ctx);
        rows[i].value = result.value;
        rows[i].valid = result.valid;
        rows[i].note = result.failure_note;
    }
    return rows;
}

std::string format_value(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

}  // namespace

std::vector<ResultRow> run_measures(const Manifest& manifest, const RunConfig& config,
                                    const std::filesystem::path& manifest_dir) {
    std::vector<FlatItem> flat;
    for (const auto& test : manifest.tests)
        for (const auto& item : test.items) flat.push_back({&test, &item});

    const std::filesystem::path temp_dir = temp_dir_from_env();
    const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<std::size_t>(
        config.parallelism > 0 ? static_cast<unsigned>(config.parallelism) : hardware,
        std::max<std::size_t>(1, flat.size()));
    set_adapter_concurrency_limit(config.adapter_concurrency > 0 ? config.adapter_concurrency
                                                                 : static_cast<int>(hardware));

    std::vector<std::vector<ResultRow>> per_item(flat.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < flat.size(); i = next.fetch_add(1))
            per_item[i] = evaluate_item(flat[i], config, manifest_dir, temp_dir);
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<ResultRow> rows;
    for (auto& item_rows : per_item)
        for (auto& row : item_rows) rows.push_back(std::move(row));
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.test_id, a.item_id, a.condition_id, a.measure) <
               std::tie(b.test_id, b.item_id, b.condition_id, b.measure);
    });
    return rows;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write results: " + path.string());
    out << "test_id,item_id,condition_id,measure,value,valid,note\n";
    for (const auto& row : rows) {
        out << csv_escape(row.test_id) << ',' << csv_escape(row.item_id) << ','
            << csv_escape(row.condition_id) << ',' << csv_escape(row.measure) << ','
            << (row.valid ? format_value(row.value) : std::string()) << ','
            << (row.valid ? "true" : "false") << ',' << csv_escape(row.note) << '\n';
    }
    if (!out.flush())
        throw Error("cannot write results: " + path.string());
}

std::vector<ResultRow> load_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open results: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto records = csv_parse(buffer.str());
    const std::vector<std::string> header = {"test_id", "item_id", "condition_id",
                                             "measure", "value",   "valid",
                                             "note"};
    if (records.empty() || records.front() != header)
        throw Error(path.string() +
                    ": results CSV needs header test_id,item_id,condition_id,measure,"
                    "value,valid,note");

    std::vector<ResultRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = path.string() + ": row " + std::to_string(i + 1);
        if (rec.size() != header.size())
            throw Error(where + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(rec.size()));
        ResultRow row;
        row.test_id = rec[0];
        row.item_id = rec[1];
        row.condition_id = rec[2];
        row.measure = rec[3];
        if (rec[5] == "true")
            row.valid = true;
        else if (rec[5] == "false")
            row.valid = false;
        else
            throw Error(where + ": valid must be true or false, got " + rec[5]);
        if (row.valid) {
            try {
                row.value = std::stod(rec[4]);
            } catch (const std::exception&) {
                throw Error(where + ": value is not a number: " + rec[4]);
            }
            if (!std::isfinite(row.value))
                throw Error(where + ": value must be finite");
        } else {
            row.value = std::numeric_limits<double>::quiet_NaN();
        }
        row.note = rec[6];
        rows.push_back(std::move(row));
    }
    return rows;
}

CorrelationReport correlate_results(const std::vector<ResultRow>& rows, const Manifest& manifest,
                                    std::vector<std::string>* warnings) {
    std::map<std::string, std::map<std::string, double>> scores;  // test -> item key -> score
    std::vector<std::string> test_ids;
    for (const auto& test : manifest.tests) {
        test_ids.push_back(test.test_id);
        auto& by_key = scores[test.test_id];
        for (const auto& item : test.items) by_key[item.key()] = item.score_mean;
    }

    // measure -> test -> (values, scores) joined over valid rows
    std::map<std::string, std::map<std::string, std::pair<std::vector<double>,
                                                          std::vector<double>>>> joined;
    std::set<std::string> warned_keys;
    for (const auto& row : rows) {
        const auto test_it = scores.find(row.test_id);
        if (test_it == scores.end()) {
            if (warnings && warned_keys.insert(row.test_id).second)
                warnings->push_back("results reference unknown test " + row.test_id);
            continue;
        }
        joined[row.measure];  // a measure with only invalid rows still gets a report row
        if (!row.valid) continue;
        const std::string key = row.item_id + "/" + row.condition_id;
        const auto score_it = test_it->second.find(key);
        if (score_it == test_it->second.end()) {
            if (warnings && warned_keys.insert(row.test_id + "/" + key).second)
                warnings->push_back("results reference unknown item " + key + " in test " +
                                    row.test_id);
            continue;
        }
        auto& bucket = joined[row.measure][row.test_id];
        bucket.first.push_back(row.value);
        bucket.second.push_back(score_it->second);
    }

    std::map<std::string, std::vector<ReportCell>> cells;
    for (const auto& [measure, by_test] : joined) {
        auto& list = cells[measure];
        for (const auto& test : manifest.tests) {
            ReportCell cell;
            cell.test_id = test.test_id;
            const auto ex = test.exclusions.find(measure);
            cell.excluded = ex != test.exclusions.end() && ex->second;
            const auto it = by_test.find(test.test_id);
            if (it != by_test.end() && it->second.first.size() >= 3) {
                cell.available = true;
                cell.stats = make_cell(test.test_id, it->second.first, it->second.second);
            }
            list.push_back(std::move(cell));
        }
    }

    CorrelationReport report = build_report(test_ids, cells, warnings);
    return report;
}

}
