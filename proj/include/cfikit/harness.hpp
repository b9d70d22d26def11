#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/game.hpp"

namespace cfikit {

enum ExitCode { kPass = 0, kVerdictFail = 1, kAuditFail = 2, kResourceFail = 3, kInputFail = 4 };

// Everything needed to rebuild the pair of structures and the blur request.
struct BlurContext {
    nlohmann::json graph;  // catalog name, {"catalog": ...}, {"file": ...} or an inline graph document
    int q = 2;
    std::vector<uint32_t> base_twist;  // empty means zero
    int t = 0, tp = 1;
    uint32_t theta = 0;
    std::vector<int> pebbles;
    int k = 1;
    nlohmann::json blurer = "auto";
    std::optional<StarLayout> layout;
    bool allow_unaudited = false;

    nlohmann::json to_json() const;
    static BlurContext from_json(const nlohmann::json& j);
};

struct Scenario {
    std::string name;
    BlurContext ctx;
    int m = 2;
    std::vector<std::string> steps;
    nlohmann::json game = nlohmann::json::object();
    std::string inject;  // "" or "identity"
    std::optional<std::vector<int>> claimed;
    uint64_t max_tuples = kDefaultTupleLimit;

    nlohmann::json to_json() const;
    static Scenario from_json(const nlohmann::json& j);
};

// resolves the graph spec; relative files are taken from dir
BaseGraph resolve_graph(const nlohmann::json& spec, const std::string& dir = ".");

struct BlurPair {
    std::shared_ptr<const CfiStructure> a, b;
};
BlurPair build_pair(const BlurContext& c, const std::string& dir = ".");

// blur build output: context, matrix and audit in one document
nlohmann::json blur_document(const BlurContext& c, const BlurResult& r);
// replays verify_blur on a blur document
nlohmann::json verify_blur_document(const nlohmann::json& doc, const std::string& dir = ".");

struct ScenarioReport {
    int exit_code = kPass;
    nlohmann::json report;
};

ScenarioReport run_scenario(const Scenario& s, const std::string& dir = ".");
ScenarioReport run_scenario_file(const std::string& path);

// decode, encode, decode again: identical bytes and equal values
bool roundtrip(const std::string& path, std::string* why = nullptr);

std::string read_file(const std::string& path);

}  // namespace cfikit
