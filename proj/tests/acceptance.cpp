// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cfikit/harness.hpp"
#include "support.hpp"

using namespace cfikit;
using namespace cfikit::testing;

namespace {

struct Failure {
    std::string why;
};

void expect(bool ok, const std::string& why) {
    if (!ok) throw Failure{why};
}

using Check = std::function<std::string()>;

int failures = 0;

void run(int id, const std::string& title, const Check& body) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail, status = "PASS";
    try {
        detail = body();
    } catch (const Failure& f) {
        status = "FAIL";
        detail = f.why;
    } catch (const std::exception& e) {
        status = "FAIL";
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (status == "FAIL") ++failures;
    std::printf("%s %2d %s [%.2fs] %s\n", status.c_str(), id, title.c_str(), secs, detail.c_str());
    std::fflush(stdout);
}

std::string arity1_k4() {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    BlurOptions o;
    o.blurer = arity1_blurer(2, 3);
    auto r = build_S_1ary(*a, *b, {}, 0, 1, o);
    expect(r.audit.audited(), "hypothesis audit failed");
    expect(r.s.nrows() == 64 && r.s.ncols() == 64, "S is not 64x64");
    expect(rank(r.s) == 64, "rank below 64");
    auto pred = matrix_predicates(r.s, *a, aut_generators(*a, {}));
    expect(pred.all(), "predicates: " + pred.first_failure);
    auto a2 = orbit_partition(*a, {}, 2);
    auto b2 = retype(a2, *b);
    expect(verify_blur(r.s, a2, b2, type_map(a2, b2), 1).ok, "verify_blur rejected S");
    std::string why;
    expect(active_region_check(r.s, *a, {0}, &why), "active region {t}: " + why);
    return "64x64, rank 64, " + std::to_string(a2.num_blocks()) + " 2-orbits";
}

std::string arity1_q4() {
    auto [a, b] = twisted_pair(named_graph("Q4"), 2, 0, 1, 2);
    int pebble = a->gadget_begin(15);
    expect(a->base().distance(0, 15) >= 3, "pebble too close");
    auto r = build_S_1ary(*a, *b, {pebble}, 0, 1);
    expect(r.audit.audited(), "hypothesis audit failed");
    auto a2 = orbit_partition(*a, {pebble}, 2);
    auto b2 = retype(a2, *b);
    expect(verify_blur(r.s, a2, b2, type_map(a2, b2), 1).ok, "verify_blur rejected S");
    return std::to_string(a->size()) + "-element structure, " + std::to_string(a2.num_blocks()) + " 2-orbits";
}

std::string arity1_q3() {
    auto [a, b] = twisted_pair(named_graph("K4"), 3, 0, 1, 4);
    expect(a->size() == 256, "structure does not have 256 elements");
    BlurOptions o;
    o.blurer = arity1_blurer(3, 3);
    expect(o.blurer->xi == embed(arity1_blurer(2, 3), 1).xi, "the Z8 family is not the doubled Z4 family");
    auto r = build_S_1ary(*a, *b, {}, 0, 1, o);
    expect(r.audit.audited(), "hypothesis audit failed");
    auto a2 = orbit_partition(*a, {}, 2);
    auto b2 = retype(a2, *b);
    expect(verify_blur(r.s, a2, b2, type_map(a2, b2), 1).ok, "verify_blur rejected S");
    return "256 elements, blurer 2*{(3,0,1),(3,1,0),(2,1,1)}";
}

std::string blurer_suite() {
    std::mt19937_64 rng(11);
    std::vector<Blurer> family;
    for (int q = 2; q <= 4; ++q)
        for (int d = 3; d <= 6; ++d) family.push_back(arity1_blurer(q, d));
    Blurer k2 = kary_blurer(2), k3 = kary_blurer(3);
    expect(k2.xi.size() == 3 && k3.xi.size() == 35, "k-ary family sizes differ from 3 and 35");
    family.push_back(k2);
    family.push_back(k3);
    family.push_back(pad(arity1_blurer(2, 3), 5));
    family.push_back(restrict_k(k3, 2));
    family.push_back(restrict_k(k3, 1));
    family.push_back(scale(arity1_blurer(2, 3), 3));
    family.push_back(scale(k3, 3));
    family.push_back(embed(arity1_blurer(2, 3), 1));
    family.push_back(embed(k3, 2));
    family.push_back(blurer_for(2, 4, 8, 7));
    int tables = 0;
    for (auto& b : family) {
        auto chk = verify_blurer(b);
        expect(chk.ok, "verify_blurer failed (" + chk.condition + ") for " + b.to_json().dump());
        expect(b.xi.size() % 2 == 1, "even family size");
        for (int rep = 0; rep < 1000; ++rep) {
            auto ks = random_subset(rng, b.d, b.k);
            std::map<Vec, int> table;
            auto f = [&](const Vec& v) {
                auto it = table.find(v);
                if (it == table.end()) it = table.emplace(v, int(rng() & 1)).first;
                return it->second;
            };
            expect(blurer_sum_check(b, ks, f), "blurer_sum_check failed");
            ++tables;
        }
    }
    return std::to_string(family.size()) + " families, " + std::to_string(tables) + " random tables";
}

std::string lucas() {
    // Pascal's triangle as the independent oracle
    std::vector<std::vector<bool>> odd{{true}};
    for (unsigned n = 1; n <= 1024; ++n) {
        std::vector<bool> row(n + 1, true);
        for (unsigned m = 1; m < n; ++m) row[m] = odd[n - 1][m - 1] != odd[n - 1][m];
        odd.push_back(row);
    }
    uint64_t checked = 0;
    for (unsigned n = 0; n <= 1024; ++n)
        for (unsigned m = 0; m <= n; ++m, ++checked)
            expect(binomial_is_odd(n, m) == odd[n][m], "parity mismatch at " + std::to_string(n));
    for (unsigned e = 0; e <= 10; ++e) {
        unsigned p = 1u << e;
        for (unsigned m = 0; m <= p; ++m) {
            auto exact = binomial(p, m);
            expect(((exact & 1) != 0) == binomial_is_odd(p, m), "exact binomial disagrees");
            if (m > 0 && m < p) expect((exact & 1) == 0, "binom(2^n, m) odd");
            if (m < p) expect((binomial(p - 1, m) & 1) != 0, "binom(2^n - 1, m) even");
        }
    }
    return std::to_string(checked) + " parities, exact binomials for n <= 10";
}

std::string invertibility() {
    std::mt19937_64 rng(5);
    struct Setting {
        std::shared_ptr<const CfiStructure> s;
        std::vector<int> pebbles;
        std::shared_ptr<const OrbitPartition> rows;
        OrbitPartition two;
    };
    std::vector<Setting> settings;
    auto add = [&](const BaseGraph& g, std::vector<int> pebbles) {
        auto s = std::make_shared<const CfiStructure>(g, 2, TwistFunction::zero(g, 2));
        auto rows = std::make_shared<const OrbitPartition>(orbit_partition(*s, pebbles, 1));
        settings.push_back({s, pebbles, rows, orbit_partition(*s, pebbles, 2)});
    };
    BaseGraph k4 = named_graph("K4"), q4 = named_graph("Q4");
    add(k4, {});
    add(k4, {5});
    add(q4, {});
    add(q4, {3, 700});
    int good = 0, caught = 0;
    for (int i = 0; i < 200; ++i) {
        auto& st = settings[i % settings.size()];
        BlockMatrix m = random_orbit_matrix(rng, st.rows, st.two);
        auto gens = aut_generators(*st.s, st.pebbles);
        auto pred = matrix_predicates(m, *st.s, gens);
        expect(pred.all(), "generator produced a matrix failing " + pred.first_failure);
        expect(is_invertible(m), "predicates hold but the matrix is singular");
        ++good;
        BlockMatrix bad = even_row_perturbation(rng, m);
        auto pred2 = matrix_predicates(bad, *st.s, gens);
        expect(!pred2.all() || !is_invertible(bad), "perturbation passed every check");
        ++caught;
    }
    return std::to_string(good) + " invertible, " + std::to_string(caught) + " perturbations rejected";
}

std::string orbit_oracles() {
    uint64_t pairs = 0;
    for (int q = 1; q <= 2; ++q) {
        BaseGraph g = named_graph("K4");
        CfiStructure s(g, q, TwistFunction::zero(g, q));
        for (const std::vector<int>& pebbles : {std::vector<int>{}, std::vector<int>{1}})
            for (int k = 1; k <= 2; ++k) {
                auto closure = brute_force_orbits(s, pebbles, k);
                auto part = orbit_partition(s, pebbles, k);
                TupleSpace sp(s.size(), k);
                // same_orbit and descriptors against the brute-force closure
                std::map<std::vector<int>, std::vector<uint64_t>> by_origin;
                for (uint64_t t = 0; t < sp.size(); ++t) {
                    std::vector<int> o;
                    for (int x : sp.decode(t)) o.push_back(s.origin(x));
                    by_origin[o].push_back(t);
                }
                for (auto& [o, ts] : by_origin)
                    for (uint64_t x : ts)
                        for (uint64_t y : ts) {
                            bool truth = closure[x] == closure[y];
                            expect(same_orbit(s, pebbles, sp.decode(x), sp.decode(y)) == truth, "same_orbit disagrees");
                            expect((part.block_of[x] == part.block_of[y]) == truth, "orbit partition disagrees");
                            bool type_eq = tuple_type(s, pebbles, sp.decode(x)) == tuple_type(s, pebbles, sp.decode(y));
                            expect(type_eq == truth, "type equality disagrees with same_orbit");
                            ++pairs;
                        }
            }
    }
    for (const char* name : {"K4", "prism3"})
        for (int q = 1; q <= 2; ++q) {
            BaseGraph g = named_graph(name);
            CfiStructure s(g, q, TwistFunction::zero(g, q));
            uint64_t formula = uint64_t(1) << (q * (g.m() - g.n() + 1));
            expect(count_circulations(g, q) == formula, std::string("brute-force |Aut| differs on ") + name);
            expect(group_size(s, aut_generators(s, {})) == formula, std::string("generated |Aut| differs on ") + name);
        }
    return std::to_string(pairs) + " tuple pairs, |Aut| on K4 and prism3";
}

std::string products() {
    uint64_t checks = 0;
    for (const char* name : {"K4", "Q4"}) {
        BaseGraph g = named_graph(name);
        bool small = g.n() == 4;
        int t1 = 0, t1p = 1;
        int t2 = small ? 2 : 14, t2p = small ? 3 : 15;
        int t3 = small ? 1 : 7, t3p = small ? 3 : 5;
        const int q = 2;
        auto base = TwistFunction::zero(g, q);
        auto f2 = base.plus(g.edge_id(t1, t1p), 2);
        auto f3 = f2.plus(g.edge_id(t2, t2p), 2);
        auto f4 = f3.plus(g.edge_id(t3, t3p), 2);
        auto gp = std::make_shared<const BaseGraph>(g);
        CfiStructure a1(gp, q, base), a2(gp, q, f2), a3(gp, q, f3), a4(gp, q, f4);
        auto rows = std::make_shared<const OrbitPartition>(orbit_partition(a1, {}, 1));
        // one orbit computation, descriptors taken in each source structure
        auto blur = [&](const CfiStructure& x, const CfiStructure& y, int t, int tp) {
            BlurOptions o;
            o.rows = std::make_shared<const OrbitPartition>(retype(*rows, x));
            return build_S_1ary(x, y, {}, t, tp, o).s;
        };
        auto s = blur(a1, a2, t1, t1p);
        auto t = blur(a2, a3, t2, t2p);
        auto u = blur(a3, a4, t3, t3p);
        std::string why;
        expect(active_region_check(s, a1, {t1}, &why), "A(S) not certified: " + why);
        expect(active_region_check(t, a2, {t2}, &why), "A(T) not certified: " + why);
        BlockMatrix st = multiply(s, t);
        // the product is active at most where a factor is
        expect(active_region_check(st, a1, {t1, t2}, &why), "A(S.T) not inside the union: " + why);
        auto a2k = orbit_partition(a1, {}, 2);
        auto c2k = retype(a2k, a3);
        expect(verify_blur(st, a2k, c2k, type_map(a2k, c2k), 1).ok, "S.T does not blur the two-edge twist");
        checks += product_identities(a1, s, t, u, t1, t2, t3, small ? 0 : 10000);
    }
    return std::to_string(checks) + " identity evaluations, S.T blurs the composite";
}

std::string query_solver() {
    std::mt19937_64 rng(3);
    std::vector<BaseGraph> graphs{named_graph("K4"), named_graph("prism3"), named_graph("petersen"),
                                  named_graph("Q3"), named_graph("K5")};
    for (int i = 0; i < 100; ++i) {
        const BaseGraph& g = graphs[i % graphs.size()];
        int q = 1 + int(rng() % 3);
        TwistFunction f = random_twist(rng, g, q);
        CfiStructure s(g, q, f);
        RelationalCfi r = strip(s);
        expect(cfi_query_solve(r) == total_twist(f), "solver differs from the twist sum");
        // a relabelled copy is an isomorphic structure with the same answer
        expect(cfi_query_solve(shuffle_universe(rng, r)) == total_twist(f), "solver depends on labels");
        // relocate twist along a random certified path isomorphism
        auto path = random_path(rng, g);
        RingValue c(q, int64_t(rng() % (uint64_t(1) << q)));
        PartialMap m = path_isomorphism(g, c, path);
        TwistFunction moved = f.plus(g.edge_id(path[0], path[1]), c.v)
                                  .plus(g.edge_id(path[path.size() - 2], path.back()), -int64_t(c.v));
        CfiStructure image(g, q, moved);
        expect(verify_isomorphism(m, s, image), "path isomorphism not certified");
        expect(cfi_query_solve(strip(image)) == total_twist(f), "solver differs after a path isomorphism");
    }
    // every twist function of K4 with q <= 2 reaches the canonical twist of its sum
    uint64_t found = 0;
    BaseGraph k4 = named_graph("K4");
    for (int q = 1; q <= 2; ++q) {
        uint32_t mod = 1u << q;
        uint64_t total = 1;
        for (int e = 0; e < k4.m(); ++e) total *= mod;
        for (uint64_t code = 0; code < total; ++code) {
            TwistFunction f = TwistFunction::zero(k4, q);
            uint64_t c = code;
            for (int e = 0; e < k4.m(); ++e, c /= mod) f.values[e] = uint32_t(c % mod);
            TwistFunction canon = TwistFunction::zero(k4, q).plus(0, total_twist(f).v);
            auto m = find_isomorphism(k4, f, canon);
            expect(m.has_value(), "no isomorphism between equal twist sums");
            expect(verify_isomorphism(*m, CfiStructure(k4, q, f), CfiStructure(k4, q, canon)),
                   "found map is not an isomorphism");
            TwistFunction other = TwistFunction::zero(k4, q).plus(0, total_twist(f).v + 1);
            expect(!find_isomorphism(k4, f, other), "isomorphism between different twist sums");
            ++found;
        }
    }
    return "100 random instances, " + std::to_string(found) + " certified K4 isomorphisms";
}

std::string game() {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    int rounds_checked = 0;
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        auto st = new_game(a, b, 1, 2);
        SpoilerPolicy pol;
        pol.kind = SpoilerPolicy::Kind::Random;
        pol.seed = seed;
        auto res = play(st, pol, 20);
        expect(res.duplicator_survived && res.rounds_played == 20, "Duplicator lost with seed " + std::to_string(seed));
        for (auto& r : res.transcript.at("rounds")) {
            expect(r.at("referee").at("ok").get<bool>(), "referee rejected a round");
            expect(r.at("partial_isomorphism").get<bool>(), "pebbles do not form a partial isomorphism");
            ++rounds_checked;
        }
    }
    auto st = new_game(a, b, 1, 2);
    SpoilerPolicy ex;
    ex.kind = SpoilerPolicy::Kind::Exhaustive;
    ex.depth = 3;
    auto res = play(st, ex, 3);
    expect(res.duplicator_survived, "exhaustive Spoiler found a win: " + res.outcome);
    return std::to_string(rounds_checked) + " random rounds refereed, exhaustive depth 3 with " +
           std::to_string(res.transcript.value("moves_checked", 0)) + " moves";
}

std::string kary_assembly() {
    BaseGraph g = dodecahedron();
    auto [a, b] = twisted_pair(g, 2, 6, 5, 2);
    BlurOptions o;
    o.allow_unaudited = true;
    o.layout = StarLayout{0, {{0, 1, 2, 6, 5}, {0, 10, 9, 13, 12}, {0, 19, 18, 17, 4}}};
    Blurer xi;
    xi.k = 2;
    xi.q = 2;
    xi.a = 2;
    xi.d = 3;
    xi.xi = {{0, 2, 2}, {2, 0, 2}, {2, 2, 0}};
    o.blurer = xi;
    auto r = build_S_kary(*a, *b, {}, 6, 5, 2, o);
    expect(r.s.audit_status == "unaudited", "synthetic layout was not labelled unaudited");
    auto pred = matrix_predicates(r.s, *a, aut_generators(*a, {}));
    expect(pred.all(), "predicates: " + pred.first_failure);
    return std::to_string(r.s.nrows()) + " rows, " + std::to_string(r.factors) + " recursive factors, audit " +
           r.s.audit_status;
}

}  // namespace

int main() {
    run(1, "arity-1 blur on K4", arity1_k4);
    run(2, "arity-1 blur on Q4 with a pebble", arity1_q4);
    run(3, "arity-1 blur on K4 over Z8", arity1_q3);
    run(4, "blurer families and transforms", blurer_suite);
    run(5, "binomial parity", lucas);
    run(6, "invertibility criterion", invertibility);
    run(7, "orbit oracles", orbit_oracles);
    run(8, "product identities and composite blur", products);
    run(9, "twist-sum query solver", query_solver);
    run(10, "k=1 game on K4", game);
    run(11, "k=2 assembly on an unaudited layout", kary_assembly);
    return failures == 0 ? 0 : 1;
}
