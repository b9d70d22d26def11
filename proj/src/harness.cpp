#include "cfikit/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfikit/error.hpp"

namespace cfikit {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {

nlohmann::json parse_json(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(what + ": " + e.what());
    }
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("field ") + key + ": " + e.what());
    }
}

}  // namespace

nlohmann::json BlurContext::to_json() const {
    nlohmann::json j{{"graph", graph}, {"q", q},           {"twist", {{"edge", {t, tp}}, {"theta", theta}}},
                     {"pebbles", pebbles}, {"k", k},       {"blurer", blurer},
                     {"allow_unaudited", allow_unaudited}};
    if (!base_twist.empty()) j["base_twist"] = base_twist;
    if (layout) j["layout"] = layout->to_json();
    return j;
}

BlurContext BlurContext::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DecodeError("blur context must be an object");
    BlurContext c;
    try {
        c.graph = j.at("graph");
        c.q = j.at("q").get<int>();
        auto& tw = j.at("twist");
        auto edge = tw.at("edge").get<std::vector<int>>();
        if (edge.size() != 2) throw DecodeError("twist edge needs two vertices");
        c.t = edge[0];
        c.tp = edge[1];
        c.theta = tw.at("theta").get<uint32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("blur context: ") + e.what());
    }
    c.base_twist = field(j, "base_twist", std::vector<uint32_t>{});
    c.pebbles = field(j, "pebbles", std::vector<int>{});
    c.k = field(j, "k", 1);
    if (j.contains("blurer")) c.blurer = j.at("blurer");
    if (j.contains("layout")) c.layout = StarLayout::from_json(j.at("layout"));
    c.allow_unaudited = field(j, "allow_unaudited", false);
    if (c.q < 1 || c.q > 15) throw ValidationError("q out of range");
    if (c.k < 1) throw ValidationError("k must be positive");
    return c;
}

nlohmann::json Scenario::to_json() const {
    nlohmann::json j = ctx.to_json();
    j["format"] = "scenario";
    j["name"] = name;
    j["m"] = m;
    j["steps"] = steps;
    j["game"] = game;
    if (!inject.empty()) j["inject"] = inject;
    if (claimed) j["claimed"] = *claimed;
    j["limits"] = {{"max_tuples", max_tuples}};
    return j;
}

Scenario Scenario::from_json(const nlohmann::json& j) {
    Scenario s;
    s.ctx = BlurContext::from_json(j);
    s.name = field(j, "name", std::string("unnamed"));
    s.m = field(j, "m", 2 * s.ctx.k);
    s.steps = field(j, "steps", std::vector<std::string>{"build", "orbits", "blur", "verify_blur"});
    static const std::vector<std::string> known{"build",      "orbits",        "blurer", "blur",
                                                "predicates", "verify_blur",   "active_region", "game"};
    for (auto& st : s.steps)
        if (std::find(known.begin(), known.end(), st) == known.end()) throw ValidationError("unknown step " + st);
    if (j.contains("game")) s.game = j.at("game");
    s.inject = field(j, "inject", std::string());
    if (!s.inject.empty() && s.inject != "identity") throw ValidationError("unknown injection " + s.inject);
    if (j.contains("claimed")) s.claimed = j.at("claimed").get<std::vector<int>>();
    if (j.contains("limits")) s.max_tuples = field(j.at("limits"), "max_tuples", kDefaultTupleLimit);
    return s;
}

BaseGraph resolve_graph(const nlohmann::json& spec, const std::string& dir) {
    if (spec.is_string()) return load_graph(spec.get<std::string>());
    if (!spec.is_object()) throw DecodeError("graph spec must be a name or an object");
    if (spec.contains("catalog")) return named_graph(spec.at("catalog").get<std::string>());
    if (spec.contains("file")) {
        fs::path p(spec.at("file").get<std::string>());
        if (p.is_relative()) p = fs::path(dir) / p;
        return load_graph(p.string());
    }
    if (spec.value("format", "") == "graph") return graph_from_json(spec);
    throw DecodeError("graph spec needs catalog, file or an inline graph");
}

BlurPair build_pair(const BlurContext& c, const std::string& dir) {
    auto g = std::make_shared<const BaseGraph>(resolve_graph(c.graph, dir));
    TwistFunction base = TwistFunction::zero(*g, c.q);
    if (!c.base_twist.empty()) {
        if (int(c.base_twist.size()) != g->m()) throw ValidationError("base twist needs one value per edge");
        for (size_t e = 0; e < c.base_twist.size(); ++e) base.values[e] = c.base_twist[e] & mod_mask(c.q);
    }
    int e = g->edge_id(c.t, c.tp);
    if (e < 0) throw ValidationError("twist edge is not an edge of the graph");
    BlurPair p;
    p.a = std::make_shared<const CfiStructure>(g, c.q, base);
    p.b = std::make_shared<const CfiStructure>(g, c.q, base.plus(e, c.theta));
    for (int v : c.pebbles)
        if (v < 0 || v >= p.a->size()) throw ValidationError("pebble out of range");
    return p;
}

namespace {

BlurOptions options_for(const BlurContext& c) {
    BlurOptions o;
    o.allow_unaudited = c.allow_unaudited;
    if (c.blurer.is_object()) o.blurer = Blurer::from_json(c.blurer);
    else if (!(c.blurer.is_string() && c.blurer == "auto")) throw DecodeError("blurer must be \"auto\" or a blurer document");
    o.layout = c.layout;
    return o;
}

}  // namespace

nlohmann::json blur_document(const BlurContext& c, const BlurResult& r) {
    return {{"format", "blur"},
            {"context", c.to_json()},
            {"blurer", r.blurer.to_json()},
            {"audit", r.audit.to_json()},
            {"matrix", to_json(r.s)}};
}

nlohmann::json verify_blur_document(const nlohmann::json& doc, const std::string& dir) {
    if (doc.value("format", "") != "blur") throw DecodeError("not a blur document");
    BlurContext c = BlurContext::from_json(doc.at("context"));
    auto pair = build_pair(c, dir);
    auto rows = std::make_shared<const OrbitPartition>(orbit_partition(*pair.a, c.pebbles, c.k));
    auto cols = std::make_shared<const OrbitPartition>(retype(*rows, *pair.b));
    BlockMatrix s = matrix_from_json(doc.at("matrix"), rows, cols);
    auto a2k = orbit_partition(*pair.a, c.pebbles, 2 * c.k);
    auto b2k = retype(a2k, *pair.b);
    auto f = type_map(a2k, b2k);
    auto v = verify_blur(s, a2k, b2k, f, c.k);
    nlohmann::json out = v.to_json(a2k);
    out["audit_status"] = s.audit_status;
    return out;
}

ScenarioReport run_scenario(const Scenario& s, const std::string& dir) {
    ScenarioReport rep;
    nlohmann::json steps = nlohmann::json::object();
    auto finish = [&](int code, const std::string& status) {
        rep.exit_code = code;
        rep.report = {{"format", "report"}, {"scenario", s.name}, {"exit_code", code}, {"status", status}, {"steps", steps}};
        return rep;
    };
    auto wants = [&](const std::string& st) { return std::find(s.steps.begin(), s.steps.end(), st) != s.steps.end(); };
    try {
        BlurPair pair = build_pair(s.ctx, dir);
        const CfiStructure& a = *pair.a;
        const CfiStructure& b = *pair.b;
        const int k = s.ctx.k;
        steps["build"] = {{"universe", a.size()},
                          {"total_twist_a", total_twist(a.twist()).v},
                          {"total_twist_b", total_twist(b.twist()).v}};

        std::shared_ptr<const OrbitPartition> rows;
        std::optional<OrbitPartition> a2k, b2k;
        auto need_rows = [&]() {
            if (!rows) rows = std::make_shared<const OrbitPartition>(orbit_partition(a, s.ctx.pebbles, k, s.max_tuples));
        };
        auto need_2k = [&]() {
            if (!a2k) {
                a2k = orbit_partition(a, s.ctx.pebbles, 2 * k, s.max_tuples);
                b2k = retype(*a2k, b);
            }
        };
        if (wants("orbits")) {
            need_rows();
            steps["orbits"] = {{"k_orbits", rows->num_blocks()}};
            // the 2k-orbits are only needed to replay the blur verdict
            if (wants("verify_blur")) {
                need_2k();
                steps["orbits"]["two_k_orbits"] = a2k->num_blocks();
            }
        }

        BlurOptions opts = options_for(s.ctx);
        if (wants("blurer")) {
            const BaseGraph& g = a.base();
            int d = k == 1 ? g.degree(s.ctx.t) : (s.ctx.layout ? int(s.ctx.layout->paths.size()) : g.degree(s.ctx.t));
            Blurer bl = opts.blurer ? *opts.blurer : blurer_for(k, s.ctx.q, s.ctx.theta, d);
            Blurer as_k = bl;
            as_k.k = k;
            auto chk = verify_blurer(as_k);
            steps["blurer"] = {{"blurer", bl.to_json()}, {"check", chk.to_json()}};
            if (!chk.ok) return finish(kVerdictFail, "blurer check failed");
        }

        std::optional<BlurResult> blur;
        bool needs_matrix = wants("blur") || wants("predicates") || wants("verify_blur") || wants("active_region");
        if (needs_matrix) {
            need_rows();
            opts.rows = rows;
            try {
                blur = build_S_kary(a, b, s.ctx.pebbles, s.ctx.t, s.ctx.tp, k, opts);
            } catch (const AuditError& e) {
                steps["blur"] = {{"error", e.what()}};
                return finish(kAuditFail, "hypothesis audit failed");
            }
            if (s.inject == "identity") {
                auto cols = blur->s.col_part_ptr();
                blur->s = BlockMatrix::identity(rows, cols);
                blur->s.audit_status = "unaudited";
            }
            steps["blur"] = {{"nonzeros", blur->s.nnz()},
                             {"audit", blur->audit.to_json()},
                             {"audit_status", blur->s.audit_status},
                             {"injected", s.inject}};
        }
        int code = kPass;
        if (wants("predicates")) {
            auto rep2 = matrix_predicates(blur->s, a, aut_generators(a, s.ctx.pebbles));
            steps["predicates"] = rep2.to_json();
            if (!rep2.all()) code = kVerdictFail;
        }
        if (wants("verify_blur")) {
            need_2k();
            auto f = type_map(*a2k, *b2k);
            auto v = verify_blur(blur->s, *a2k, *b2k, f, k);
            steps["verify_blur"] = v.to_json(*a2k);
            if (!v.ok) code = kVerdictFail;
        }
        if (wants("active_region")) {
            std::vector<int> claimed = s.claimed ? *s.claimed : std::vector<int>{s.ctx.t};
            std::string why;
            bool ok = active_region_check(blur->s, a, claimed, &why);
            steps["active_region"] = {{"claimed", claimed}, {"certified", ok}, {"reason", why}};
            if (!ok) code = kVerdictFail;
        }
        if (wants("game")) {
            auto st = new_game(pair.a, pair.b, k, s.m);
            SpoilerPolicy pol = SpoilerPolicy::from_json(s.game);
            int rounds = s.game.value("rounds", 10);
            auto res = play(st, pol, rounds);
            steps["game"] = res.transcript;
            if (!res.duplicator_survived) code = kVerdictFail;
        }
        return finish(code, code == kPass ? "pass" : "verdict failed");
    } catch (const AuditError& e) {
        steps["error"] = e.what();
        return finish(kAuditFail, "hypothesis audit failed");
    } catch (const ResourceError& e) {
        steps["error"] = e.what();
        return finish(kResourceFail, "resource limit");
    } catch (const std::bad_alloc&) {
        steps["error"] = "out of memory";
        return finish(kResourceFail, "resource limit");
    } catch (const Error& e) {
        steps["error"] = e.what();
        return finish(kInputFail, "bad input");
    } catch (const nlohmann::json::exception& e) {
        steps["error"] = e.what();
        return finish(kInputFail, "bad input");
    }
}

ScenarioReport run_scenario_file(const std::string& path) {
    Scenario s;
    try {
        s = Scenario::from_json(parse_json(read_file(path), path));
    } catch (const Error& e) {
        ScenarioReport r;
        r.exit_code = kInputFail;
        r.report = {{"format", "report"}, {"scenario", path}, {"exit_code", kInputFail}, {"status", "bad input"},
                    {"steps", {{"error", e.what()}}}};
        return r;
    } catch (const nlohmann::json::exception& e) {
        ScenarioReport r;
        r.exit_code = kInputFail;
        r.report = {{"format", "report"}, {"scenario", path}, {"exit_code", kInputFail}, {"status", "bad input"},
                    {"steps", {{"error", e.what()}}}};
        return r;
    }
    return run_scenario(s, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

namespace {

// the twist of a stripped document, read back from one E pair per edge
CfiStructure stripped_from_json(const nlohmann::json& j) {
    try {
        int q = j.at("q").get<int>();
        if (q < 1 || q > 15) throw DecodeError("q out of range");
        auto g = std::make_shared<const BaseGraph>(graph_from_json(j.at("base")));
        CfiStructure zero(g, q, TwistFunction::zero(*g, q));
        const auto& uni = j.at("universe");
        if (int(uni.size()) != zero.size()) throw DecodeError("universe size does not match the base graph");
        TwistFunction t = TwistFunction::zero(*g, q);
        std::vector<char> found(g->m(), 0);
        const auto& rel = j.at("relations");
        for (uint32_t c = 0; c < (1u << q); ++c) {
            auto name = "RE" + std::to_string(c);
            if (!rel.contains(name)) throw DecodeError("missing relation " + name);
            for (auto& pr : rel.at(name)) {
                int u = pr.at(0).get<int>(), v = pr.at(1).get<int>();
                if (u < 0 || v < 0 || u >= zero.size() || v >= zero.size()) throw DecodeError("pair out of range");
                int e = g->edge_id(zero.origin(u), zero.origin(v));
                if (e < 0 || found[e]) continue;
                // c = a(y) + b(x) - g(e), and zero twist gives a(y) + b(x)
                auto c0 = zero.edge_value(u, v);
                t.values[e] = (*c0 - c) & mod_mask(q);
                found[e] = 1;
            }
        }
        for (char f : found)
            if (!f) throw DecodeError("an edge has no E pair");
        CfiStructure s(g, q, t);
        if (to_json(s, true) != j) throw DecodeError("relations do not match the construction");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("cfi json: ") + e.what());
    }
}

std::string dump(const nlohmann::json& j) { return j.dump(1) + "\n"; }

std::string reencode_json(const std::string& text, const std::string& dir) {
    nlohmann::json j = parse_json(text, "document");
    std::string fmt = j.is_object() ? j.value("format", "") : "";
    if (fmt == "graph") return dump(to_json(graph_from_json(j)));
    if (fmt == "cfi") {
        if (j.value("stripped", false)) return dump(to_json(stripped_from_json(j), true));
        return dump(to_json(cfi_from_json(j), false));
    }
    if (fmt == "blurer") return dump(Blurer::from_json(j).to_json());
    if (fmt == "scenario") return dump(Scenario::from_json(j).to_json());
    if (fmt == "blur") {
        BlurContext c = BlurContext::from_json(j.at("context"));
        auto pair = build_pair(c, dir);
        auto rows = std::make_shared<const OrbitPartition>(orbit_partition(*pair.a, c.pebbles, c.k));
        auto cols = std::make_shared<const OrbitPartition>(retype(*rows, *pair.b));
        BlockMatrix m = matrix_from_json(j.at("matrix"), rows, cols);
        nlohmann::json out = j;
        out["context"] = c.to_json();
        out["blurer"] = Blurer::from_json(j.at("blurer")).to_json();
        out["matrix"] = to_json(m);
        return dump(out);
    }
    throw DecodeError("unknown document format '" + fmt + "'");
}

}  // namespace

bool roundtrip(const std::string& path, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    std::string text = read_file(path);
    std::string dir = fs::path(path).parent_path().string();
    if (dir.empty()) dir = ".";
    size_t first = text.find_first_not_of(" \t\r\n");
    bool is_json = first != std::string::npos && (text[first] == '{' || text[first] == '[');
    std::string e1, e2;
    if (is_json) {
        e1 = reencode_json(text, dir);
        e2 = reencode_json(e1, dir);
    } else {
        BaseGraph g1 = graph_from_text(text);
        e1 = to_text(g1);
        BaseGraph g2 = graph_from_text(e1);
        e2 = to_text(g2);
        if (!(g1 == g2)) return fail("decoded graphs differ");
    }
    if (e1 != e2) return fail("re-encoding is not stable");
    if (is_json && !(parse_json(e1, "first encoding") == parse_json(e2, "second encoding")))
        return fail("decoded values differ");
    return true;
}

}  // namespace cfikit
