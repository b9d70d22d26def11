#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cfikit/error.hpp"
#include "cfikit/harness.hpp"

using namespace cfikit;
using nlohmann::json;

namespace {

std::string out_path;

void emit(const json& j) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw DecodeError("cannot write " + out_path);
    f << j.dump(2) << "\n";
}

void emit_text(const std::string& s) {
    if (out_path.empty()) {
        std::cout << s;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw DecodeError("cannot write " + out_path);
    f << s;
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DecodeError(path + ": " + e.what());
    }
}

// options shared by the commands that build a twisted pair
struct PairArgs {
    std::string graph = "K4";
    int q = 2;
    std::vector<int> edge;
    int64_t theta = -1;  // -1: half the modulus
    std::vector<int> pebbles;

    void add(CLI::App* c) {
        c->add_option("--graph", graph, "catalog name or graph file")->capture_default_str();
        c->add_option("--q", q, "ring exponent, Z_{2^q}")->capture_default_str();
        c->add_option("--twist-edge", edge, "edge carrying the twist, default the first edge")->expected(2);
        c->add_option("--theta", theta, "twist value, default 2^{q-1}");
        c->add_option("--pebbles", pebbles, "pebbled universe elements of the untwisted structure");
    }

    BlurContext context(int k) const {
        BlurContext c;
        c.graph = graph;
        c.q = q;
        if (edge.size() == 2) {
            c.t = edge[0];
            c.tp = edge[1];
        } else {
            BaseGraph g = load_graph(graph);
            if (g.m() == 0) throw ValidationError("graph has no edges");
            c.t = g.edges()[0].first;
            c.tp = g.edges()[0].second;
        }
        c.theta = theta < 0 ? uint32_t(1) << (q - 1) : uint32_t(theta) & mod_mask(q);
        c.pebbles = pebbles;
        c.k = k;
        return c;
    }
};

int exit_for(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const AuditError& e) {
        std::cerr << "audit: " << e.what() << "\n";
        return kAuditFail;
    } catch (const ResourceError& e) {
        std::cerr << "resource: " << e.what() << "\n";
        return kResourceFail;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource: out of memory\n";
        return kResourceFail;
    } catch (const Error& e) {
        std::cerr << "input: " << e.what() << "\n";
        return kInputFail;
    } catch (const json::exception& e) {
        std::cerr << "input: " << e.what() << "\n";
        return kInputFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputFail;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CFI structures, orbit matrices and the invertible-map game"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("-o,--out", out_path, "write the result here instead of stdout");
    int code = kPass;

    // graph
    auto* graph = app.add_subcommand("graph", "base graphs");
    graph->require_subcommand(1);
    std::string g_in, g_to = "json";
    auto* g_props = graph->add_subcommand("props", "degree, girth and connectivity");
    g_props->add_option("graph", g_in, "catalog name or file")->required();
    g_props->callback([&] {
        BaseGraph g = load_graph(g_in);
        json j = properties(g).to_json();
        j["n"] = g.n();
        j["m"] = g.m();
        emit(j);
    });
    int c_deg = 3, c_girth = 3, c_conn = 1;
    uint64_t c_seed = 0;
    bool c_list = false;
    auto* g_cat = graph->add_subcommand("catalog", "catalog lookup with random fallback");
    g_cat->add_flag("--list", c_list, "print the catalog names");
    g_cat->add_option("--degree", c_deg);
    g_cat->add_option("--girth", c_girth);
    g_cat->add_option("--connectivity", c_conn);
    auto* seed_opt = g_cat->add_option("--seed", c_seed, "seed for the random fallback");
    g_cat->callback([&] {
        if (c_list) {
            emit(catalog_names());
            return;
        }
        if (!seed_opt->count()) throw ArgumentError("--seed is required");
        try {
            emit(to_json(catalog_or_generate(c_deg, c_girth, c_conn, c_seed)));
        } catch (const GenerationFailed& e) {
            std::cerr << e.what() << "\n";
            if (e.best) emit(to_json(*e.best));
            code = kVerdictFail;
        }
    });
    auto* g_conv = graph->add_subcommand("convert", "text <-> json");
    g_conv->add_option("graph", g_in, "catalog name or file")->required();
    g_conv->add_option("--to", g_to)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
    g_conv->callback([&] {
        BaseGraph g = load_graph(g_in);
        if (g_to == "text") emit_text(to_text(g));
        else emit(to_json(g));
    });

    // cfi
    auto* cfi = app.add_subcommand("cfi", "CFI structures");
    cfi->require_subcommand(1);
    PairArgs cfi_args;
    bool stripped = false, twisted = false;
    auto* cfi_build = cfi->add_subcommand("build", "emit the structure as JSON");
    cfi_args.add(cfi_build);
    cfi_build->add_flag("--twisted", twisted, "emit the twisted member of the pair");
    cfi_build->add_flag("--stripped", stripped, "omit the twist function");
    cfi_build->callback([&] {
        auto pair = build_pair(cfi_args.context(1));
        emit(to_json(twisted ? *pair.b : *pair.a, stripped));
    });

    // orbits
    auto* orb = app.add_subcommand("orbits", "k-orbits of a pebbled structure");
    PairArgs orb_args;
    int orb_k = 1;
    uint64_t orb_max = kDefaultTupleLimit;
    orb_args.add(orb);
    orb->add_option("--k", orb_k, "tuple length")->capture_default_str();
    orb->add_option("--max-tuples", orb_max)->capture_default_str();
    orb->callback([&] {
        auto pair = build_pair(orb_args.context(1));
        emit(to_json(orbit_partition(*pair.a, orb_args.pebbles, orb_k, orb_max)));
    });

    // blurer
    auto* blr = app.add_subcommand("blurer", "blurer families");
    blr->require_subcommand(1);
    std::string b_file;
    int b_k = 1, b_q = 2, b_d = 3;
    uint32_t b_a = 2;
    uint64_t b_budget = uint64_t(1) << 16;
    auto* b_ver = blr->add_subcommand("verify", "check the defining conditions");
    b_ver->add_option("file", b_file)->required();
    b_ver->callback([&] {
        auto chk = verify_blurer(Blurer::from_json(read_json(b_file)));
        emit(chk.to_json());
        if (!chk.ok) code = kVerdictFail;
    });
    auto* b_make = blr->add_subcommand("make", "construct a blurer for (k, q, a, d)");
    auto* b_search = blr->add_subcommand("search", "brute-force search for a blurer");
    for (auto* c : {b_make, b_search}) {
        c->add_option("--k", b_k)->capture_default_str();
        c->add_option("--q", b_q)->capture_default_str();
        c->add_option("--a", b_a)->capture_default_str();
        c->add_option("--d", b_d)->capture_default_str();
        c->add_option("--budget", b_budget)->capture_default_str();
    }
    b_make->callback([&] {
        Blurer b = blurer_for(b_k, b_q, b_a, b_d, b_budget);
        auto chk = verify_blurer(b);
        emit(b.to_json());
        if (!chk.ok) code = kVerdictFail;
    });
    b_search->callback([&] {
        auto b = search_blurer(b_k, b_q, b_a, b_d, b_budget);
        if (!b) throw NotFoundError("no blurer within the search budget");
        emit(b->to_json());
        if (!verify_blurer(*b).ok) code = kVerdictFail;
    });

    // blur
    auto* blur = app.add_subcommand("blur", "similarity matrices that blur a twist");
    blur->require_subcommand(1);
    PairArgs blur_args;
    int blur_k = 1;
    bool unaudited = false;
    std::string blur_blurer, blur_file;
    auto* blur_build = blur->add_subcommand("build", "emit the matrix and its audit");
    blur_args.add(blur_build);
    blur_build->add_option("--k", blur_k)->capture_default_str();
    blur_build->add_option("--blurer", blur_blurer, "blurer document, default automatic");
    blur_build->add_flag("--allow-unaudited", unaudited, "continue when hypotheses fail");
    blur_build->callback([&] {
        BlurContext c = blur_args.context(blur_k);
        c.allow_unaudited = unaudited;
        if (!blur_blurer.empty()) c.blurer = read_json(blur_blurer);
        auto pair = build_pair(c);
        BlurOptions o;
        o.allow_unaudited = unaudited;
        if (c.blurer.is_object()) o.blurer = Blurer::from_json(c.blurer);
        auto r = build_S_kary(*pair.a, *pair.b, c.pebbles, c.t, c.tp, c.k, o);
        emit(blur_document(c, r));
    });
    auto* blur_ver = blur->add_subcommand("verify", "replay verify_blur on a blur document");
    blur_ver->add_option("file", blur_file)->required();
    blur_ver->callback([&] {
        json v = verify_blur_document(read_json(blur_file));
        emit(v);
        if (!v.value("blurs", false)) code = kVerdictFail;
    });

    // game
    auto* game = app.add_subcommand("game", "the invertible-map game");
    game->require_subcommand(1);
    PairArgs game_args;
    int gk = 1, gm = 2, rounds = 10, depth = 1;
    std::string policy = "random";
    uint64_t gseed = 0;
    auto* play_cmd = game->add_subcommand("play", "automated Duplicator against a Spoiler policy");
    game_args.add(play_cmd);
    play_cmd->add_option("--k", gk)->capture_default_str();
    play_cmd->add_option("--m", gm)->capture_default_str();
    play_cmd->add_option("--rounds", rounds)->capture_default_str();
    play_cmd->add_option("--policy", policy)->check(CLI::IsMember({"random", "exhaustive"}))->capture_default_str();
    play_cmd->add_option("--depth", depth, "search depth of the exhaustive policy")->capture_default_str();
    play_cmd->add_option("--seed", gseed)->required();
    play_cmd->callback([&] {
        auto pair = build_pair(game_args.context(gk));
        auto st = new_game(pair.a, pair.b, gk, gm);
        SpoilerPolicy pol = SpoilerPolicy::from_json({{"policy", policy}, {"seed", gseed}, {"depth", depth}});
        auto res = play(st, pol, rounds);
        emit(res.transcript);
        if (!res.duplicator_survived) code = kVerdictFail;
    });

    // solve-query
    std::string sq_file;
    auto* sq = app.add_subcommand("solve-query", "twist sum of a structure given by its relations");
    sq->add_option("file", sq_file)->required();
    sq->callback([&] {
        auto r = relational_from_json(read_json(sq_file));
        RingValue v = cfi_query_solve(r);
        emit(json{{"q", v.q}, {"twist_sum", v.v}});
    });

    // scenario
    auto* scn = app.add_subcommand("scenario", "reproducible experiment runs");
    scn->require_subcommand(1);
    std::string scn_file;
    auto* scn_run = scn->add_subcommand("run", "run a scenario and print its report");
    scn_run->add_option("file", scn_file)->required();
    scn_run->callback([&] {
        auto rep = run_scenario_file(scn_file);
        emit(rep.report);
        code = rep.exit_code;
    });
    auto* scn_rt = scn->add_subcommand("roundtrip", "decode, encode and decode a file");
    scn_rt->add_option("file", scn_file)->required();
    scn_rt->callback([&] {
        std::string why;
        bool ok = roundtrip(scn_file, &why);
        emit(json{{"file", scn_file}, {"roundtrip", ok}, {"reason", why}});
        if (!ok) code = kVerdictFail;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kInputFail;
    } catch (...) {
        return exit_for(std::current_exception());
    }
    return code;
}
