#include <doctest.h>

#include "cfikit/similarity.hpp"
#include "../support.hpp"

using namespace cfikit;
using cfikit::testing::twisted_pair;

TEST_CASE("component classes") {
    BaseGraph g = cfikit::testing::dodecahedron();
    StarLayout l{0, {{0, 1, 2, 6, 5}, {0, 10, 9, 13, 12}, {0, 19, 18, 17, 4}}};
    l.validate(g);
    CHECK(classify_component(g, l, {6, 5}).kind == ComponentKind::Tip);
    CHECK(classify_component(g, l, {6, 5}).index == 0);
    CHECK(classify_component(g, l, {0}).kind == ComponentKind::StarCenter);
    CHECK(classify_component(g, l, {11}).kind == ComponentKind::Sky);
    CHECK(classify_component(g, l, {1, 2}).kind == ComponentKind::Star);
}

TEST_CASE("tau and psi fix what they should") {
    BaseGraph g = cfikit::testing::dodecahedron();
    CfiStructure s(g, 2, TwistFunction::zero(g, 2));
    StarLayout l{0, {{0, 1, 2, 6, 5}, {0, 10, 9, 13, 12}, {0, 19, 18, 17, 4}}};
    Tuple u{s.gadget_begin(11) + 1, s.gadget_begin(6) + 2};
    CHECK(tau_map(s, l, {0, 0, 0}, u) == u);
    CHECK(psi_xi(s, l, {0, 0, 0}, u) == u);
    Tuple sky{s.gadget_begin(11), s.gadget_begin(16)};
    CHECK(tau_map(s, l, {1, 2, 3}, sky) == sky);
    CHECK(psi_xi(s, l, {2, 0, 2}, sky) == sky);
    Tuple tip{s.gadget_begin(6) + 1, s.gadget_begin(5) + 2};
    CHECK(tau_map(s, l, {1, 0, 0}, tip) != tip);
    CHECK(tau_map(s, l, {0, 1, 0}, tip) == tip);
}

TEST_CASE("1-ary blur rows and active region") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto r = build_S_1ary(*a, *b, {}, 0, 1);
    CHECK(r.audit.audited());
    CHECK(active_region_check(r.s, *a, {0}));
    CHECK_FALSE(active_region_check(r.s, *a, {}));
    auto rows = std::make_shared<const OrbitPartition>(orbit_partition(*a, {}, 1));
    CHECK(active_region_check(BlockMatrix::identity(rows, rows), *a, {}));
}

TEST_CASE("k=1 through the k-ary entry point") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto r1 = build_S_1ary(*a, *b, {}, 0, 1);
    auto rk = build_S_kary(*a, *b, {}, 0, 1, 1);
    CHECK(r1.s == rk.s);
}

TEST_CASE("hypothesis failures stop the construction unless overridden") {
    BaseGraph q4 = named_graph("Q4");
    auto [a, b] = twisted_pair(q4, 2, 0, 1, 2);
    int pebble = a->gadget_begin(1);
    CHECK_THROWS_AS(build_S_1ary(*a, *b, {pebble}, 0, 1), AuditError);
    BlurOptions o;
    o.allow_unaudited = true;
    auto r = build_S_1ary(*a, *b, {pebble}, 0, 1, o);
    CHECK(r.s.audit_status == "unaudited");
    CHECK_FALSE(r.audit.failed().empty());
}

TEST_CASE("zero star twist gives the identity") {
    BaseGraph g = cfikit::testing::dodecahedron();
    CfiStructure s(g, 2, TwistFunction::zero(g, 2));
    StarLayout l{0, {{0, 1, 2, 6, 5}, {0, 10, 9, 13, 12}, {0, 19, 18, 17, 4}}};
    BlurOptions o;
    o.allow_unaudited = true;
    o.blurer = kary_blurer(2);
    auto r = build_S_xi(s, {s.gadget_begin(0)}, {0, 0, 0}, {0, 0, 0}, l, 2, o);
    CHECK(r.factors == 0);
    for (uint64_t u = 0; u < r.s.nrows(); ++u) {
        REQUIRE(r.s.row(u).size() == 1);
        CHECK(r.s.row(u)[0] == u);
    }
}
