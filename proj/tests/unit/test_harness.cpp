#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cfikit/harness.hpp"

using namespace cfikit;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name, const std::string& body) {
    fs::path p = fs::temp_directory_path() / ("cfikit-unit-" + name);
    std::ofstream(p) << body;
    return p;
}
const fs::path kScenarios = CFIKIT_SCENARIO_DIR;
}  // namespace

TEST_CASE("bundled scenarios") {
    CHECK(run_scenario_file((kScenarios / "k1-K4.json").string()).exit_code == kPass);
    auto inj = run_scenario_file((kScenarios / "k1-K4-identity.json").string());
    CHECK(inj.exit_code == kVerdictFail);
    CHECK(inj.report.dump().find("witness") != std::string::npos);
    CHECK(run_scenario_file((kScenarios / "malformed-graph.json").string()).exit_code == kInputFail);
}

TEST_CASE("round trips") {
    for (auto& e : fs::directory_iterator(kScenarios))
        if (e.path().extension() == ".json") {
            std::string why;
            CHECK_MESSAGE(roundtrip(e.path().string(), &why), e.path().string() << ": " << why);
        }
    BaseGraph pet = named_graph("petersen");
    CfiStructure s(pet, 3, TwistFunction::zero(pet, 3).plus(4, 5));
    auto full = scratch("petersen-q3.json", to_json(s).dump());
    auto bare = scratch("petersen-q3-stripped.json", to_json(s, true).dump());
    std::string why;
    CHECK_MESSAGE(roundtrip(full.string(), &why), why);
    CHECK_MESSAGE(roundtrip(bare.string(), &why), why);
    CHECK(cfi_from_json(nlohmann::json::parse(read_file(full.string()))).twist() == s.twist());
    std::string text = read_file(full.string());
    auto cut = scratch("truncated.json", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(roundtrip(cut.string()), DecodeError);
}

TEST_CASE("blur documents replay") {
    BlurContext c;
    c.graph = "K4";
    c.theta = 2;
    auto pair = build_pair(c);
    auto r = build_S_1ary(*pair.a, *pair.b, {}, c.t, c.tp);
    auto doc = blur_document(c, r);
    auto v = verify_blur_document(doc);
    CHECK(v.at("blurs").get<bool>());
    CHECK(BlurContext::from_json(c.to_json()).to_json() == c.to_json());
}
