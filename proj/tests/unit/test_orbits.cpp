#include <doctest.h>

#include "cfikit/orbits.hpp"
#include "../support.hpp"

using namespace cfikit;

namespace {
CfiStructure plain(const char* name, int q) {
    BaseGraph g = named_graph(name);
    return CfiStructure(g, q, TwistFunction::zero(g, q));
}
}  // namespace

TEST_CASE("automorphism group sizes") {
    auto s1 = plain("K4", 1), s2 = plain("K4", 2);
    CHECK(cfikit::testing::group_size(s1, aut_generators(s1, {})) == 8);
    CHECK(cfikit::testing::group_size(s2, aut_generators(s2, {})) == 64);
    auto basis = aut_generators(s2, {s2.gadget_begin(2)});
    const BaseGraph& g = s2.base();
    for (auto& gen : basis.gens)
        for (int y : g.neighbors(2)) CHECK(gen[g.edge_id(2, y)] == 0);
}

TEST_CASE("tuple indexing") {
    TupleSpace sp(10, 3);
    CHECK(sp.size() == 1000);
    CHECK(sp.encode({1, 2, 3}) == 123);
    CHECK(sp.decode(407) == Tuple{4, 0, 7});
    CHECK(sp.entry(407, 2) == 7);
}

TEST_CASE("1-orbits are gadgets until pebbled") {
    auto s = plain("K4", 2);
    auto p = orbit_partition(s, {}, 1);
    CHECK(p.num_blocks() == 4);
    for (size_t b = 0; b < 4; ++b) CHECK(p.block_size(b) == 16);
    // the pebbled gadget falls apart into singletons, its neighbours into
    // four classes by the value toward it
    auto q = orbit_partition(s, {s.gadget_begin(1)}, 1);
    CHECK(q.num_blocks() == 16 + 3 * 4);
    for (int v = s.gadget_begin(1); v < s.gadget_begin(2); ++v) CHECK(q.block_size(q.block_of[v]) == 1);
}

TEST_CASE("same_orbit basics") {
    auto s = plain("K4", 2);
    int a = s.gadget_begin(0), b = a + 5;
    CHECK(same_orbit(s, {}, {a}, {a}));
    CHECK(same_orbit(s, {}, {a}, {b}));
    CHECK_FALSE(same_orbit(s, {a + 1}, {a}, {b}));
    CHECK_FALSE(same_orbit(s, {}, {a}, {s.gadget_begin(1)}));
}

TEST_CASE("type descriptors ignore twists away from the tuple") {
    BaseGraph q4 = named_graph("Q4");
    auto f = TwistFunction::zero(q4, 2);
    CfiStructure a(q4, 2, f), b(q4, 2, f.plus(q4.edge_id(14, 15), 2));
    Tuple u{a.gadget_begin(0) + 3, a.gadget_begin(1) + 9};
    CHECK(tuple_type(a, {}, u) == tuple_type(b, {}, u));
    CHECK(tuple_type(a, {}, {a.gadget_begin(0)}) == tuple_type(a, {}, {a.gadget_begin(0) + 7}));
}

TEST_CASE("orbit size guard") {
    auto s = plain("Q4", 2);
    CHECK_THROWS_AS(orbit_partition(s, {}, 3, 1000), ResourceError);
}

TEST_CASE("fixing a vertex matches recomputation with an extra pebble") {
    auto s = plain("K4", 1);
    auto p2 = orbit_partition(s, {}, 2);
    int w = s.gadget_begin(1) + 2;
    auto p1 = orbit_partition(s, {w}, 1);
    for (size_t b = 0; b < p2.num_blocks(); ++b) {
        Tuple first = p2.space.decode(p2.block(b)[0]);
        if (s.origin(first[0]) != 1) continue;
        auto rest = fix_vertex_orbit(p2, b, {0}, {w});
        if (rest.empty()) continue;
        // residual tuples are 1-tuples, all in one orbit of the pebbled structure
        for (uint32_t t : rest) CHECK(p1.block_of[t] == p1.block_of[rest[0]]);
        CHECK(rest.size() == p1.block_size(p1.block_of[rest[0]]));
    }
    CHECK(fix_vertex_orbit(p2, 0, {}, {}).size() == p2.block_size(0));
}

TEST_CASE("component split of far-apart singletons") {
    auto s = plain("Q4", 1);
    auto p = orbit_partition(s, {}, 2, uint64_t(1) << 20);
    Tuple u{s.gadget_begin(0), s.gadget_begin(15)};
    size_t b = p.block_of[p.space.encode(u)];
    auto split = component_split(s, p, b, {0});
    CHECK(split.left.size() == size_t(s.gadget_size(0)));
    CHECK(split.right.size() == size_t(s.gadget_size(15)));
    CHECK(p.block_size(b) == split.left.size() * split.right.size());
    auto whole = recombine(split, s.size());
    CHECK(whole.size() == p.block_size(b));
}
