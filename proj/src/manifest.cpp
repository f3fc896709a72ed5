#include "paqkit/manifest.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "paqkit/csv.hpp"

namespace paqkit {

namespace {

using nlohmann::json;

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
    throw Error(origin + ": " + path + ": " + message);
}

std::string require_string(const json& node, const char* field, const std::string& origin,
                           const std::string& path, bool allow_empty = false) {
    const auto it = node.find(field);
    if (it == node.end())
        fail(origin, path, std::string("missing field ") + field);
    if (!it->is_string())
        fail(origin, path + "." + field, "expected a string");
    const auto value = it->get<std::string>();
    if (value.empty() && !allow_empty)
        fail(origin, path + "." + field, "must not be empty");
    return value;
}

ManifestItem parse_item(const json& node, const std::string& origin, const std::string& path) {
    if (!node.is_object())
        fail(origin, path, "expected an object");
    ManifestItem item;
    item.item_id = require_string(node, "item_id", origin, path);
    item.condition_id = require_string(node, "condition_id", origin, path);
    item.test_path = require_string(node, "test_path", origin, path);
    item.ref_target_path = require_string(node, "ref_target_path", origin, path);

    if (const auto it = node.find("other_ref_paths"); it != node.end()) {
        if (!it->is_array())
            fail(origin, path + ".other_ref_paths", "expected an array of strings");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& entry = (*it)[i];
            if (!entry.is_string() || entry.get<std::string>().empty())
                fail(origin, path + ".other_ref_paths[" + std::to_string(i) + "]",
                     "expected a non-empty string");
            item.other_ref_paths.push_back(entry.get<std::string>());
        }
    }

    const auto score_it = node.find("score_mean");
    if (score_it == node.end())
        fail(origin, path, "missing field score_mean");
    if (!score_it->is_number())
        fail(origin, path + ".score_mean", "expected a number");
    item.score_mean = score_it->get<double>();
    if (!(item.score_mean >= 0.0 && item.score_mean <= 100.0))
        fail(origin, path + ".score_mean", "must be in [0, 100]");

    if (const auto it = node.find("n_ratings"); it != node.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long>() < 1)
            fail(origin, path + ".n_ratings", "expected a positive integer");
        item.n_ratings = it->get<int>();
    }
    return item;
}

TestManifest parse_test(const json& node, const std::string& origin, const std::string& path) {
    if (!node.is_object())
        fail(origin, path, "expected an object");
    TestManifest test;
    test.test_id = require_string(node, "test_id", origin, path);

    const auto items_it = node.find("items");
    if (items_it == node.end())
        fail(origin, path, "missing field items");
    if (!items_it->is_array() || items_it->empty())
        fail(origin, path + ".items", "expected a non-empty array");
    std::set<std::string> keys;
    for (std::size_t i = 0; i < items_it->size(); ++i) {
        const std::string item_path = path + ".items[" + std::to_string(i) + "]";
        ManifestItem item = parse_item((*items_it)[i], origin, item_path);
        if (!keys.insert(item.key()).second)
            fail(origin, item_path, "duplicate (item_id, condition_id): " + item.key());
        test.items.push_back(std::move(item));
    }

    if (const auto it = node.find("exclusions"); it != node.end()) {
        if (!it->is_object())
            fail(origin, path + ".exclusions", "expected an object of booleans");
        for (const auto& [name, flag] : it->items()) {
            if (!flag.is_boolean())
                fail(origin, path + ".exclusions." + name, "expected a boolean");
            test.exclusions[name] = flag.get<bool>();
        }
    }
    return test;
}

Manifest finish_manifest(std::vector<TestManifest> tests, const std::string& origin) {
    std::set<std::string> ids;
    for (const auto& t : tests)
        if (!ids.insert(t.test_id).second)
            fail(origin, "tests", "duplicate test_id: " + t.test_id);
    if (tests.empty())
        fail(origin, "tests", "manifest has no tests");
    return Manifest{std::move(tests)};
}

Manifest load_manifest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open manifest: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto records = csv_parse(buffer.str());
    const std::vector<std::string> header = {"test_id",         "item_id",
                                             "condition_id",    "test_path",
                                             "ref_target_path", "other_ref_paths",
                                             "score_mean",      "n_ratings"};
    if (records.empty() || records.front() != header)
        throw Error(path.string() +
                    ": CSV manifest needs header test_id,item_id,condition_id,test_path,"
                    "ref_target_path,other_ref_paths,score_mean,n_ratings");

    std::vector<TestManifest> tests;
    const auto test_for = [&](const std::string& id) -> TestManifest& {
        for (auto& t : tests)
            if (t.test_id == id) return t;
        tests.push_back(TestManifest{id, {}, {}});
        return tests.back();
    };

    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& row = records[i];
        const std::string where = path.string() + ": row " + std::to_string(i + 1);
        if (row.size() != header.size())
            throw Error(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(row.size()));
        for (std::size_t f = 0; f < 5; ++f)
            if (row[f].empty())
                throw Error(where + ": field " + header[f] + " must not be empty");

        ManifestItem item;
        item.item_id = row[1];
        item.condition_id = row[2];
        item.test_path = row[3];
        item.ref_target_path = row[4];
        std::stringstream others(row[5]);
        std::string part;
        while (std::getline(others, part, ';'))
            if (!part.empty()) item.other_ref_paths.push_back(part);
        try {
            item.score_mean = std::stod(row[6]);
        } catch (const std::exception&) {
            throw Error(where + ": score_mean is not a number: " + row[6]);
        }
        if (!(item.score_mean >= 0.0 && item.score_mean <= 100.0))
            throw Error(where + ": score_mean must be in [0, 100]");
        if (!row[7].empty()) {
            try {
                item.n_ratings = std::stoi(row[7]);
            } catch (const std::exception&) {
                throw Error(where + ": n_ratings is not an integer: " + row[7]);
            }
            if (*item.n_ratings < 1)
                throw Error(where + ": n_ratings must be positive");
        }

        TestManifest& test = test_for(row[0]);
        for (const auto& existing : test.items)
            if (existing.key() == item.key())
                throw Error(where + ": duplicate (item_id, condition_id): " + item.key());
        test.items.push_back(std::move(item));
    }
    return finish_manifest(std::move(tests), path.string());
}

}  // namespace

Manifest parse_manifest_json(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": line " + std::to_string(line_of_byte(text, e.byte)) + ": " +
                    e.what());
    }

    std::vector<TestManifest> tests;
    if (root.is_object() && root.contains("tests")) {
        const auto& array = root["tests"];
        if (!array.is_array())
            fail(origin, "tests", "expected an array");
        for (std::size_t i = 0; i < array.size(); ++i)
            tests.push_back(parse_test(array[i], origin, "tests[" + std::to_string(i) + "]"));
    } else {
        tests.push_back(parse_test(root, origin, "$"));
    }
    return finish_manifest(std::move(tests), origin);
}

std::string manifest_to_json(const Manifest& manifest) {
    json tests = json::array();
    for (const auto& test : manifest.tests) {
        json items = json::array();
        for (const auto& item : test.items) {
            json node = {{"item_id", item.item_id},
                         {"condition_id", item.condition_id},
                         {"test_path", item.test_path},
                         {"ref_target_path", item.ref_target_path},
                         {"other_ref_paths", item.other_ref_paths},
                         {"score_mean", item.score_mean}};
            if (item.n_ratings) node["n_ratings"] = *item.n_ratings;
            items.push_back(std::move(node));
        }
        json node = {{"test_id", test.test_id}, {"items", std::move(items)}};
        if (!test.exclusions.empty()) {
            json exclusions = json::object();
            for (const auto& [name, flag] : test.exclusions) exclusions[name] = flag;
            node["exclusions"] = std::move(exclusions);
        }
        tests.push_back(std::move(node));
    }
    return json{{"tests", std::move(tests)}}.dump(2) + "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv")
        return load_manifest_csv(path);
    if (ext == ".json") {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open manifest: " + path.string());
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_manifest_json(buffer.str(), path.string());
    }
    throw Error("manifest must be .json or .csv: " + path.string());
}

}
