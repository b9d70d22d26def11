#include <doctest.h>

#include <random>

#include "cfikit/orbits.hpp"
#include "../support.hpp"

using namespace cfikit;

TEST_CASE("universe sizes") {
    BaseGraph k4 = named_graph("K4");
    CHECK(CfiStructure(k4, 2, TwistFunction::zero(k4, 2)).size() == 64);
    CHECK(CfiStructure(k4, 1, TwistFunction::zero(k4, 1)).size() == 16);
    BaseGraph q4 = named_graph("Q4");
    CHECK(CfiStructure(q4, 2, TwistFunction::zero(q4, 2)).size() == 1024);
}

TEST_CASE("total twist") {
    BaseGraph k4 = named_graph("K4");
    auto z = TwistFunction::zero(k4, 2);
    CHECK(total_twist(z).v == 0);
    CHECK(total_twist(z.plus(0, 3)).v == 3);
    CHECK(total_twist(z.plus(0, 3).plus(1, 1)).v == 0);
}

TEST_CASE("path isomorphisms") {
    BaseGraph k4 = named_graph("K4");
    CHECK(path_isomorphism(k4, RingValue(2, 0), {1, 0, 2}).is_identity());
    auto m = path_isomorphism(k4, RingValue(2, 2), {1, 0, 2});
    REQUIRE(m.d[0].size() == 3);
    CHECK(m.d[0][k4.nbr_index(0, 1)] == 2);
    CHECK(m.d[0][k4.nbr_index(0, 2)] == 2);
    CHECK(m.d[0][k4.nbr_index(0, 3)] == 0);
    CHECK(m.then(path_isomorphism(k4, RingValue(2, -2), {1, 0, 2})).is_identity());

    // moves a twist from one end of the path to the other
    auto f = TwistFunction::zero(k4, 2);
    auto c = RingValue(2, 1);
    auto p = path_isomorphism(k4, c, {1, 0, 2, 3});
    auto g = f.plus(k4.edge_id(1, 0), 1).plus(k4.edge_id(2, 3), -1);
    CHECK(verify_isomorphism(p, CfiStructure(k4, 2, f), CfiStructure(k4, 2, g)));
    CHECK_FALSE(verify_isomorphism(PartialMap::identity(k4, 2), CfiStructure(k4, 2, f),
                                   CfiStructure(k4, 2, f.plus(0, 1))));
    CHECK(verify_isomorphism(PartialMap::identity(k4, 2), CfiStructure(k4, 2, f), CfiStructure(k4, 2, f)));
}

TEST_CASE("star isomorphisms") {
    BaseGraph k4 = named_graph("K4");
    auto two = star_isomorphism(k4, {RingValue(2, 1), RingValue(2, -1)}, {{1, 0}, {2, 0}});
    auto stitched = path_isomorphism(k4, RingValue(2, 1), {1, 0, 2});
    CHECK(verify_isomorphism(two.then(stitched.inverse()), CfiStructure(k4, 2, TwistFunction::zero(k4, 2)),
                             CfiStructure(k4, 2, TwistFunction::zero(k4, 2))));
    CHECK(star_isomorphism(k4, {RingValue(2, 0), RingValue(2, 0)}, {{1, 0}, {2, 0}}).is_identity());
}

TEST_CASE("query solver on stripped structures") {
    BaseGraph k4 = named_graph("K4");
    auto z = TwistFunction::zero(k4, 2);
    CHECK(cfi_query_solve(strip(CfiStructure(k4, 2, z))).v == 0);
    CHECK(cfi_query_solve(strip(CfiStructure(k4, 2, z.plus(2, 3)))).v == 3);
    std::mt19937_64 rng(9);
    BaseGraph pet = petersen();
    for (int i = 0; i < 5; ++i) {
        auto f = cfikit::testing::random_twist(rng, pet, 3);
        auto r = cfikit::testing::shuffle_universe(rng, strip(CfiStructure(pet, 3, f)));
        CHECK(cfi_query_solve(r) == total_twist(f));
    }
}

TEST_CASE("malformed relational input is rejected") {
    BaseGraph k4 = named_graph("K4");
    auto j = to_json(CfiStructure(k4, 2, TwistFunction::zero(k4, 2)), true);
    j["relations"].erase("RE1");
    CHECK_THROWS_AS(relational_from_json(j), DecodeError);
}

TEST_CASE("isomorphism search follows the twist sum") {
    BaseGraph prism3 = named_graph("prism3");
    auto f = TwistFunction::zero(prism3, 2).plus(0, 1).plus(4, 2);
    auto g = TwistFunction::zero(prism3, 2).plus(7, 3);
    auto m = find_isomorphism(prism3, f, g);
    REQUIRE(m);
    CHECK(verify_isomorphism(*m, CfiStructure(prism3, 2, f), CfiStructure(prism3, 2, g)));
    CHECK_FALSE(find_isomorphism(prism3, f, TwistFunction::zero(prism3, 2)));
}
