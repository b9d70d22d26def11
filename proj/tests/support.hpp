// Oracles and generators shared by the unit tests and the acceptance run.
#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "cfikit/game.hpp"

namespace cfikit::testing {

using Pair = std::pair<std::shared_ptr<const CfiStructure>, std::shared_ptr<const CfiStructure>>;

inline Pair twisted_pair(const BaseGraph& g, int q, int t, int tp, uint32_t theta) {
    auto gp = std::make_shared<const BaseGraph>(g);
    TwistFunction f = TwistFunction::zero(g, q);
    auto a = std::make_shared<const CfiStructure>(gp, q, f);
    auto b = std::make_shared<const CfiStructure>(gp, q, f.plus(g.edge_id(t, tp), theta));
    return {a, b};
}

inline BaseGraph dodecahedron() {
    // vertex numbering of the usual LCF drawing, outer cycle first
    std::vector<Edge> e{{0, 1},   {0, 10},  {0, 19},  {1, 2},   {1, 8},   {2, 3},   {2, 6},   {3, 4},
                        {3, 19},  {4, 5},   {4, 17},  {5, 6},   {5, 15},  {6, 7},   {7, 8},   {7, 14},
                        {8, 9},   {9, 10},  {9, 13},  {10, 11}, {11, 12}, {11, 18}, {12, 13}, {12, 16},
                        {13, 14}, {14, 15}, {15, 16}, {16, 17}, {17, 18}, {18, 19}};
    return BaseGraph(20, e);
}

inline std::vector<int> random_subset(std::mt19937_64& rng, int n, int k) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

inline TwistFunction random_twist(std::mt19937_64& rng, const BaseGraph& g, int q) {
    TwistFunction f = TwistFunction::zero(g, q);
    for (auto& v : f.values) v = uint32_t(rng()) & mod_mask(q);
    return f;
}

// a random simple path with at least two edges
inline std::vector<int> random_path(std::mt19937_64& rng, const BaseGraph& g) {
    for (;;) {
        std::vector<int> p{int(rng() % g.n())};
        int len = 2 + int(rng() % 4);
        while (int(p.size()) <= len) {
            std::vector<int> next;
            for (int y : g.neighbors(p.back()))
                if (std::find(p.begin(), p.end(), y) == p.end()) next.push_back(y);
            if (next.empty()) break;
            p.push_back(next[rng() % next.size()]);
        }
        if (p.size() >= 3) return p;
    }
}

inline RelationalCfi shuffle_universe(std::mt19937_64& rng, const RelationalCfi& r) {
    std::vector<int> perm(r.size);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    RelationalCfi out = r;
    for (auto& [a, b] : out.pre) a = perm[a], b = perm[b];
    for (auto& rel : out.re)
        for (auto& [a, b] : rel) {
            a = perm[a];
            b = perm[b];
            if (a > b) std::swap(a, b);
        }
    return out;
}

// all circulations by enumerating every edge labelling, values on u->v with u < v
inline std::vector<std::vector<uint32_t>> all_circulations(const BaseGraph& g, int q) {
    const uint32_t mod = 1u << q;
    std::vector<std::vector<uint32_t>> out;
    std::vector<uint32_t> val(g.m(), 0);
    for (;;) {
        bool ok = true;
        for (int x = 0; x < g.n() && ok; ++x) {
            uint32_t s = 0;
            for (int j = 0; j < g.degree(x); ++j) {
                int y = g.neighbors(x)[j];
                uint32_t v = val[g.incident_edge(x, j)];
                s += x < y ? v : mod - v;
            }
            ok = (s & (mod - 1)) == 0;
        }
        if (ok) out.push_back(val);
        int e = 0;
        while (e < g.m() && ++val[e] == mod) val[e++] = 0;
        if (e == g.m()) break;
    }
    return out;
}

inline uint64_t count_circulations(const BaseGraph& g, int q) { return all_circulations(g, q).size(); }

// orbit id per k-tuple under every automorphism fixing the pebbles
inline std::vector<uint64_t> brute_force_orbits(const CfiStructure& s, const std::vector<int>& pebbles, int k) {
    const BaseGraph& g = s.base();
    std::vector<std::vector<int>> perms;
    for (auto& c : all_circulations(g, s.q())) {
        auto img = vertex_permutation(s, circulation_map(g, s.q(), c));
        bool fixes = true;
        for (int p : pebbles) fixes = fixes && img[p] == p;
        if (fixes) perms.push_back(img);
    }
    TupleSpace sp(s.size(), k);
    std::vector<uint64_t> id(sp.size(), UINT64_MAX);
    for (uint64_t t = 0; t < sp.size(); ++t) {
        if (id[t] != UINT64_MAX) continue;
        Tuple u = sp.decode(t);
        for (auto& img : perms) {
            Tuple v = u;
            for (int& x : v) x = img[x];
            id[sp.encode(v)] = t;
        }
    }
    return id;
}

// size of the group spanned by the generators, by closure
inline uint64_t group_size(const CfiStructure& s, const CirculationBasis& b) {
    const uint32_t mask = s.mask();
    std::set<std::vector<uint32_t>> seen{std::vector<uint32_t>(s.base().m(), 0)};
    std::deque<std::vector<uint32_t>> todo(seen.begin(), seen.end());
    while (!todo.empty()) {
        auto v = todo.front();
        todo.pop_front();
        for (auto& gen : b.gens) {
            auto w = v;
            for (size_t i = 0; i < w.size(); ++i) w[i] = (w[i] + gen[i]) & mask;
            if (seen.insert(w).second) todo.push_back(w);
        }
    }
    return seen.size();
}

// Sum of characteristic matrices of random 2-orbits inside the diagonal
// blocks, with every row weight made odd.
inline BlockMatrix random_orbit_matrix(std::mt19937_64& rng, std::shared_ptr<const OrbitPartition> rows,
                                       const OrbitPartition& two) {
    const uint64_t n = rows->space.n;
    std::vector<std::vector<size_t>> by_block(rows->num_blocks());
    for (size_t b = 0; b < two.num_blocks(); ++b) {
        uint64_t t = two.block(b)[0];
        uint64_t u = t / n, v = t % n;
        if (rows->block_of[u] == rows->block_of[v]) by_block[rows->block_of[u]].push_back(b);
    }
    std::vector<char> chosen(two.num_blocks(), 0);
    for (size_t p = 0; p < by_block.size(); ++p) {
        uint64_t weight = 0;
        size_t diagonal = SIZE_MAX;
        for (size_t b : by_block[p]) {
            uint64_t t = two.block(b)[0];
            if (t / n == t % n) diagonal = b;
            if (rng() & 1) {
                chosen[b] = 1;
                weight += two.block_size(b) / rows->block_size(p);
            }
        }
        if (weight % 2 == 0) chosen[diagonal] ^= 1;
    }
    std::vector<std::vector<uint32_t>> entries(n);
    for (size_t b = 0; b < two.num_blocks(); ++b)
        if (chosen[b])
            for (uint32_t t : two.block(b)) entries[t / n].push_back(uint32_t(t % n));
    MatrixBuilder mb(rows, rows);
    for (uint64_t r = 0; r < n; ++r) {
        for (uint32_t c : entries[r]) mb.toggle(c);
        mb.end_row();
    }
    return mb.finish();
}

// flips one entry of a random row, leaving that row with even weight
inline BlockMatrix even_row_perturbation(std::mt19937_64& rng, const BlockMatrix& m) {
    uint64_t r = rng() % m.nrows();
    auto row = m.row(r);
    std::vector<uint32_t> cols(row.begin(), row.end());
    const auto& rp = m.row_part();
    auto members = rp.block(rp.block_of[r]);
    uint32_t c = members[rng() % members.size()];
    auto it = std::find(cols.begin(), cols.end(), c);
    if (it == cols.end()) {
        cols.insert(std::upper_bound(cols.begin(), cols.end(), c), c);
    } else {
        cols.erase(it);
    }
    return m.with_row(r, cols);
}

// The disjoint-region identities for three single-twist blurs on 1-tuples.
// Exhaustive when samples is 0.  Returns the number of identities checked.
inline uint64_t product_identities(const CfiStructure& a, const BlockMatrix& s1, const BlockMatrix& s2,
                                   const BlockMatrix& s3, int t1, int t2, int t3, uint64_t samples) {
    BlockMatrix s12 = multiply(s1, s2), s13 = multiply(s1, s3), s123 = multiply(s12, s3);
    const auto& rp = s1.row_part();
    std::mt19937_64 rng(17);
    uint64_t checks = 0;
    auto fail = [](const char* what) { throw std::runtime_error(std::string("identity failed: ") + what); };
    auto each = [&](auto&& f) {
        if (samples == 0) {
            for (uint64_t u = 0; u < rp.space.n; ++u)
                for (uint32_t w : rp.block(rp.block_of[u])) f(u, uint64_t(w));
        } else {
            for (uint64_t i = 0; i < samples; ++i) {
                uint64_t u = rng() % rp.space.n;
                auto blk = rp.block(rp.block_of[u]);
                f(u, uint64_t(blk[rng() % blk.size()]));
            }
        }
    };
    each([&](uint64_t u, uint64_t w) {
        int x = a.origin(int(u));
        auto block = rp.block(rp.block_of[u]);
        // two factors: the component goes to M (S side) or N (T side)
        for (int side = 0; side < 2; ++side) {
            if (side == 1 && x == t1) continue;
            if (side == 0 && x == t2) continue;
            bool lhs = s12.get(u, w);
            bool rhs = side == 0 ? s1.get(u, w) && s2.get(w, w) : s1.get(u, u) && s2.get(u, w);
            if (lhs != rhs) fail("factorisation");
            bool sum = false;
            if (side == 0) {
                for (uint32_t u2 : block) sum ^= s12.get(u2, w);
                if (sum != s2.get(w, w)) fail("left sum");
            } else if (s12.get(u, w) != s2.get(u, w)) {
                fail("left sum over no components");
            }
            checks += 2;
        }
        // three factors: the component lies in M1, M2 or M3
        for (int part = 0; part < 3; ++part) {
            int owner = x == t1 ? 0 : x == t2 ? 1 : x == t3 ? 2 : -1;
            if (owner >= 0 && owner != part) continue;
            bool lhs = false, rhs;
            if (part == 1) {
                for (uint32_t u2 : block) lhs ^= s123.get(u2, w);
                rhs = s13.get(w, w);
            } else {
                lhs = s123.get(u, w);
                rhs = s13.get(u, w);
            }
            if (lhs != rhs) fail("middle sum");
            ++checks;
        }
    });
    return checks;
}

}  // namespace cfikit::testing
