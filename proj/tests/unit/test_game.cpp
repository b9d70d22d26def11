#include <doctest.h>

#include "cfikit/game.hpp"
#include "../support.hpp"

using namespace cfikit;
using cfikit::testing::twisted_pair;

TEST_CASE("new game checks") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto st = new_game(a, b, 1, 2);
    CHECK_FALSE(st.over);
    CHECK_THROWS_AS(new_game(a, b, 1, 1), ArgumentError);
    BaseGraph k5 = named_graph("K5");
    auto big = std::make_shared<const CfiStructure>(k5, 2, TwistFunction::zero(k5, 2));
    auto uneven = new_game(a, big, 1, 2);
    CHECK(uneven.over);
    CHECK(uneven.winner == "spoiler");
}

TEST_CASE("duplicator proposals pass the referee") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto st = new_game(a, b, 1, 2);
    pick_up(st, {0, 1});
    auto p = duplicator_round(st);
    CHECK(verify_round(st, p).ok);

    auto same = new_game(a, a, 1, 2);
    pick_up(same, {0, 1});
    auto q = duplicator_round(same);
    CHECK(verify_round(same, q).ok);
}

TEST_CASE("an identity proposal on the twisted pair is refused") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto st = new_game(a, b, 1, 2);
    pick_up(st, {0, 1});
    auto p = duplicator_round(st);
    auto rows = p.s.row_part_ptr(), cols = p.s.col_part_ptr();
    p.s = BlockMatrix::identity(rows, cols);
    auto v = verify_round(st, p);
    CHECK_FALSE(v.ok);
    CHECK_FALSE(v.reason.empty());
}

TEST_CASE("spoiler moves inside matching orbits keep a partial isomorphism") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto st = new_game(a, b, 1, 2);
    pick_up(st, {0, 1});
    auto p = duplicator_round(st);
    size_t block = 0;
    Tuple u = p.a2k->space.decode(p.a2k->block(block)[0]);
    REQUIRE(p.f[block] >= 0);
    Tuple v = p.b2k->space.decode(p.b2k->block(size_t(p.f[block]))[0]);
    CHECK(spoiler_move(st, p, block, u, v));
    CHECK(partial_isomorphism(st));
}

TEST_CASE("isomorphic pair survives any policy") {
    BaseGraph k4 = named_graph("K4");
    auto a = std::make_shared<const CfiStructure>(k4, 2, TwistFunction::zero(k4, 2));
    auto st = new_game(a, a, 1, 2);
    SpoilerPolicy pol;
    pol.seed = 3;
    auto res = play(st, pol, 5);
    CHECK(res.duplicator_survived);
    CHECK(res.rounds_played == 5);
}
