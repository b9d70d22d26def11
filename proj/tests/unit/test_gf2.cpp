#include <doctest.h>

#include "cfikit/similarity.hpp"
#include "../support.hpp"

using namespace cfikit;
using cfikit::testing::twisted_pair;

TEST_CASE("bit matrix rank") {
    CHECK(BitMatrix::identity(70).rank() == 70);
    BitMatrix ones(4, 4);
    for (size_t r = 0; r < 4; ++r)
        for (size_t c = 0; c < 4; ++c) ones.set(r, c, true);
    CHECK(ones.rank() == 1);
}

TEST_CASE("block matrices on K4") {
    auto [a, b] = twisted_pair(named_graph("K4"), 2, 0, 1, 2);
    auto rows = std::make_shared<const OrbitPartition>(orbit_partition(*a, {}, 1));
    auto cols = std::make_shared<const OrbitPartition>(retype(*rows, *b));
    auto id = BlockMatrix::identity(rows, rows);
    CHECK(rank(id) == 64);
    auto gens = aut_generators(*a, {});
    CHECK(matrix_predicates(id, *a, gens).all());

    auto r = build_S_1ary(*a, *b, {}, 0, 1);
    CHECK(multiply(r.s, BlockMatrix::identity(cols, cols)) == r.s);
    CHECK(multiply(BlockMatrix::identity(rows, rows), r.s) == r.s);
    for (uint64_t u = 0; u < 64; ++u) CHECK(r.s.row(u).size() == (a->origin(int(u)) == 0 ? 3u : 1u));

    auto zeroed = r.s.with_row(a->gadget_begin(0), {});
    auto rep = matrix_predicates(zeroed, *a, gens);
    CHECK_FALSE(rep.odd_filled);

    // identity between non-isomorphic structures fails on an edge orbit at the twist
    auto a2 = orbit_partition(*a, {}, 2);
    auto b2 = retype(a2, *b);
    auto v = verify_blur(BlockMatrix::identity(rows, cols), a2, b2, type_map(a2, b2), 1);
    CHECK_FALSE(v.ok);
    REQUIRE(v.witness);
    std::set<int> origins{a->origin(a2.space.entry(a2.block(v.witness->block)[0], 0)),
                          a->origin(a2.space.entry(a2.block(v.witness->block)[0], 1))};
    CHECK(origins == std::set<int>{0, 1});
    CHECK(verify_blur(BlockMatrix::identity(rows, rows), a2, a2, type_map(a2, a2), 1).ok);
}

TEST_CASE("characteristic matrices") {
    BaseGraph k4 = named_graph("K4");
    CfiStructure a(k4, 2, TwistFunction::zero(k4, 2));
    auto rows = std::make_shared<const OrbitPartition>(orbit_partition(a, {}, 1));
    auto two = orbit_partition(a, {}, 2);
    for (size_t b = 0; b < two.num_blocks(); ++b) {
        auto m = char_matrix(two, b, rows, rows);
        CHECK(m.nnz() == two.block_size(b));
        uint64_t t = two.block(b)[0];
        int x = a.origin(two.space.entry(t, 0)), y = a.origin(two.space.entry(t, 1));
        if (x == y && two.space.entry(t, 0) == two.space.entry(t, 1)) {
            for (uint64_t u = 0; u < 64; ++u)
                CHECK(m.row(u).size() == (a.origin(int(u)) == x ? 1u : 0u));
        } else if (k4.adjacent(x, y)) {
            CHECK(two.block_size(b) == 16u * 4u);
        }
    }
}

TEST_CASE("shape mismatches are argument errors") {
    BaseGraph k4 = named_graph("K4");
    CfiStructure a(k4, 1, TwistFunction::zero(k4, 1)), c(k4, 2, TwistFunction::zero(k4, 2));
    auto p = std::make_shared<const OrbitPartition>(orbit_partition(a, {}, 1));
    auto r = std::make_shared<const OrbitPartition>(orbit_partition(c, {}, 1));
    CHECK_THROWS_AS(multiply(BlockMatrix::identity(p, p), BlockMatrix::identity(r, r)), ArgumentError);
}
