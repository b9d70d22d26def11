#include "cfikit/orbits.hpp"

#include <algorithm>
#include <numeric>

#include "cfikit/error.hpp"

namespace cfikit {

namespace {

int edge_sign(const BaseGraph&, int x, int y) { return x < y ? 1 : -1; }

// conservation at every vertex, plus zero flow around blocked vertices
ZMatrix circulation_constraints(const BaseGraph& g, int q, const std::vector<int>& blocked, size_t extra_rows) {
    std::vector<char> is_blocked(g.n(), 0);
    for (int x : blocked) is_blocked[x] = 1;
    size_t rows = g.n() + extra_rows;
    for (int x = 0; x < g.n(); ++x)
        if (is_blocked[x]) rows += g.degree(x);
    ZMatrix m(q, rows, g.m());
    const uint32_t mask = mod_mask(q);
    size_t r = 0;
    for (int x = 0; x < g.n(); ++x, ++r)
        for (int j = 0; j < g.degree(x); ++j) {
            int y = g.neighbors(x)[j];
            m.at(r, g.incident_edge(x, j)) = uint32_t(edge_sign(g, x, y)) & mask;
        }
    for (int x = 0; x < g.n(); ++x)
        if (is_blocked[x])
            for (int j = 0; j < g.degree(x); ++j, ++r) m.at(r, g.incident_edge(x, j)) = 1;
    return m;
}

std::vector<int> pebble_origins(const CfiStructure& s, const std::vector<int>& pebbles) {
    std::vector<int> o;
    for (int p : pebbles) {
        if (p < 0 || p >= s.size()) throw ValidationError("pebble outside the universe");
        o.push_back(s.origin(p));
    }
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    return o;
}

struct UnionFind {
    std::vector<uint32_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    uint32_t find(uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(uint32_t a, uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent[a] = b;  // the smaller index stays root
    }
};

}  // namespace

CirculationBasis aut_generators(const CfiStructure& s, const std::vector<int>& pebbles) {
    CirculationBasis b;
    b.q = s.q();
    b.blocked = pebble_origins(s, pebbles);
    ZReduction red(circulation_constraints(s.base(), s.q(), b.blocked, 0));
    b.gens = red.kernel();
    return b;
}

PartialMap circulation_map(const BaseGraph& g, int q, const std::vector<uint32_t>& circ) {
    if (int(circ.size()) != g.m()) throw ArgumentError("circulation has wrong length");
    PartialMap m = PartialMap::identity(g, q);
    for (int x = 0; x < g.n(); ++x) {
        auto& d = m.d[x];
        d.assign(g.degree(x), 0);
        for (int j = 0; j < g.degree(x); ++j) {
            int y = g.neighbors(x)[j];
            uint32_t w = circ[g.incident_edge(x, j)];
            d[j] = (edge_sign(g, x, y) > 0 ? w : 0u - w) & mod_mask(q);
        }
    }
    return m;
}

std::vector<int> vertex_permutation(const CfiStructure& s, const PartialMap& m) {
    std::vector<int> img(s.size());
    for (int v = 0; v < s.size(); ++v) img[v] = s.apply(m, v);
    return img;
}

uint64_t TupleSpace::size() const {
    uint64_t r = 1;
    for (int i = 0; i < k; ++i) r *= n;
    return r;
}

uint64_t TupleSpace::encode(const Tuple& u) const {
    if (int(u.size()) != k) throw ArgumentError("tuple has wrong length");
    uint64_t t = 0;
    for (int x : u) {
        if (x < 0 || uint64_t(x) >= n) throw ArgumentError("tuple entry outside the universe");
        t = t * n + uint64_t(x);
    }
    return t;
}

Tuple TupleSpace::decode(uint64_t t) const {
    Tuple u(k);
    for (int i = k - 1; i >= 0; --i) {
        u[i] = int(t % n);
        t /= n;
    }
    return u;
}

int TupleSpace::entry(uint64_t t, int i) const {
    for (int j = k - 1; j > i; --j) t /= n;
    return int(t % n);
}

TypeDescriptor tuple_type(const CfiStructure& s, const std::vector<int>& pebbles, const Tuple& u) {
    std::vector<int> all = pebbles;
    all.insert(all.end(), u.begin(), u.end());
    TypeDescriptor t;
    auto& c = t.code;
    c.push_back(int64_t(pebbles.size()));
    c.push_back(int64_t(u.size()));
    for (int v : all) c.push_back(s.origin(v));
    const BaseGraph& g = s.base();
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j) {
            int a = all[i], b = all[j];
            int x = s.origin(a);
            if (x == s.origin(b)) {
                for (int l = 0; l < g.degree(x); ++l) c.push_back((s.coord(b, l) - s.coord(a, l)) & s.mask());
            } else if (auto e = s.edge_value(a, b)) {
                c.push_back(*e);
            }
        }
    return t;
}

OrbitPartition orbit_partition(const CfiStructure& s, const std::vector<int>& pebbles, int k, uint64_t max_tuples) {
    if (k < 1) throw ArgumentError("orbit arity must be positive");
    OrbitPartition p;
    p.k = k;
    p.space = TupleSpace(uint64_t(s.size()), k);
    p.pebbles = pebbles;
    double approx = 1;
    for (int i = 0; i < k; ++i) approx *= double(s.size());
    if (approx > double(max_tuples) || approx > 4e9) throw ResourceError("too many tuples for orbit enumeration");
    const uint64_t total = p.space.size();

    auto basis = aut_generators(s, pebbles);
    UnionFind uf(total);
    for (auto& gen : basis.gens) {
        auto img = vertex_permutation(s, circulation_map(s.base(), s.q(), gen));
        for (uint64_t t = 0; t < total; ++t) {
            uint64_t r = t, image = 0, scale = 1;
            for (int i = 0; i < k; ++i) {
                image += uint64_t(img[r % s.size()]) * scale;
                r /= s.size();
                scale *= s.size();
            }
            uf.unite(uint32_t(t), uint32_t(image));
        }
    }
    p.block_of.assign(total, 0);
    std::vector<uint32_t> id_of_root(total, UINT32_MAX);
    std::vector<uint64_t> count;
    for (uint64_t t = 0; t < total; ++t) {
        uint32_t r = uf.find(uint32_t(t));
        if (id_of_root[r] == UINT32_MAX) {
            id_of_root[r] = uint32_t(count.size());
            count.push_back(0);
        }
        p.block_of[t] = id_of_root[r];
        ++count[id_of_root[r]];
    }
    p.offsets.assign(count.size() + 1, 0);
    for (size_t b = 0; b < count.size(); ++b) p.offsets[b + 1] = p.offsets[b] + count[b];
    p.members.resize(total);
    std::vector<uint64_t> fill(p.offsets.begin(), p.offsets.end() - 1);
    for (uint64_t t = 0; t < total; ++t) p.members[fill[p.block_of[t]]++] = uint32_t(t);
    p.types.reserve(count.size());
    for (size_t b = 0; b < count.size(); ++b)
        p.types.push_back(tuple_type(s, pebbles, p.space.decode(p.members[p.offsets[b]])));
    return p;
}

OrbitPartition retype(const OrbitPartition& p, const CfiStructure& other) {
    OrbitPartition r = p;
    for (size_t b = 0; b < r.num_blocks(); ++b)
        r.types[b] = tuple_type(other, p.pebbles, p.space.decode(p.members[p.offsets[b]]));
    return r;
}

std::optional<std::vector<uint32_t>> orbit_witness(const CfiStructure& s, const std::vector<int>& pebbles,
                                                   const Tuple& u, const Tuple& v) {
    if (u.size() != v.size()) throw ArgumentError("tuples differ in length");
    for (size_t i = 0; i < u.size(); ++i)
        if (s.origin(u[i]) != s.origin(v[i])) return std::nullopt;
    const BaseGraph& g = s.base();
    size_t extra = 0;
    for (int x : u) extra += g.degree(s.origin(x));
    auto blocked = pebble_origins(s, pebbles);
    ZMatrix m = circulation_constraints(g, s.q(), blocked, extra);
    std::vector<uint32_t> rhs(m.rows, 0);
    size_t r = m.rows - extra;
    for (size_t i = 0; i < u.size(); ++i) {
        int x = s.origin(u[i]);
        for (int j = 0; j < g.degree(x); ++j, ++r) {
            int y = g.neighbors(x)[j];
            m.at(r, g.incident_edge(x, j)) = uint32_t(edge_sign(g, x, y)) & s.mask();
            rhs[r] = (s.coord(v[i], j) - s.coord(u[i], j)) & s.mask();
        }
    }
    return ZReduction(m).solve(rhs);
}

bool same_orbit(const CfiStructure& s, const std::vector<int>& pebbles, const Tuple& u, const Tuple& v) {
    return orbit_witness(s, pebbles, u, v).has_value();
}

std::vector<uint32_t> fix_vertex_orbit(const OrbitPartition& p, size_t b, const std::vector<int>& positions,
                                       const std::vector<int>& values) {
    if (positions.size() != values.size()) throw ArgumentError("positions and values differ in length");
    std::vector<char> fixed(p.k, 0);
    for (int i : positions) {
        if (i < 0 || i >= p.k) throw ArgumentError("position out of range");
        fixed[i] = 1;
    }
    TupleSpace rest(p.space.n, p.k - int(positions.size()));
    std::vector<uint32_t> out;
    for (uint32_t t : p.block(b)) {
        Tuple u = p.space.decode(t);
        bool match = true;
        for (size_t i = 0; i < positions.size() && match; ++i) match = u[positions[i]] == values[i];
        if (!match) continue;
        Tuple r;
        for (int i = 0; i < p.k; ++i)
            if (!fixed[i]) r.push_back(u[i]);
        out.push_back(uint32_t(rest.encode(r)));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::vector<int>> tuple_components(const BaseGraph& g, const std::vector<int>& origins) {
    const size_t k = origins.size();
    std::vector<int> comp(k, -1);
    std::vector<std::vector<int>> out;
    for (size_t i = 0; i < k; ++i) {
        if (comp[i] >= 0) continue;
        comp[i] = int(out.size());
        std::vector<int> group{int(i)};
        for (size_t h = 0; h < group.size(); ++h) {
            int x = origins[group[h]];
            for (size_t j = 0; j < k; ++j)
                if (comp[j] < 0 && (origins[j] == x || g.adjacent(origins[j], x))) {
                    comp[j] = comp[i];
                    group.push_back(int(j));
                }
        }
        std::sort(group.begin(), group.end());
        out.push_back(group);
    }
    return out;
}

ComponentSplit component_split(const CfiStructure& s, const OrbitPartition& p, size_t b,
                               const std::vector<int>& m_vertices) {
    Tuple rep = p.space.decode(p.block(b)[0]);
    std::vector<int> orig;
    for (int v : rep) orig.push_back(s.origin(v));
    std::vector<char> in_m(s.base().n(), 0);
    for (int x : m_vertices) in_m.at(x) = 1;
    ComponentSplit split;
    for (auto& c : tuple_components(s.base(), orig)) {
        int inside = 0;
        for (int i : c) inside += in_m[orig[i]];
        if (inside != 0 && inside != int(c.size())) throw ArgumentError("split cuts through a component");
        auto& dst = inside ? split.pos_m : split.pos_n;
        dst.insert(dst.end(), c.begin(), c.end());
    }
    std::sort(split.pos_m.begin(), split.pos_m.end());
    std::sort(split.pos_n.begin(), split.pos_n.end());
    TupleSpace sm(p.space.n, int(split.pos_m.size())), sn(p.space.n, int(split.pos_n.size()));
    for (uint32_t t : p.block(b)) {
        Tuple u = p.space.decode(t), um, un;
        for (int i : split.pos_m) um.push_back(u[i]);
        for (int i : split.pos_n) un.push_back(u[i]);
        split.left.push_back(uint32_t(sm.encode(um)));
        split.right.push_back(uint32_t(sn.encode(un)));
    }
    for (auto* v : {&split.left, &split.right}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    return split;
}

std::vector<uint32_t> recombine(const ComponentSplit& split, uint64_t n) {
    const int k = int(split.pos_m.size() + split.pos_n.size());
    TupleSpace sm(n, int(split.pos_m.size())), sn(n, int(split.pos_n.size())), full(n, k);
    std::vector<uint32_t> out;
    for (uint32_t a : split.left)
        for (uint32_t b : split.right) {
            Tuple u(k), um = sm.decode(a), un = sn.decode(b);
            for (size_t i = 0; i < um.size(); ++i) u[split.pos_m[i]] = um[i];
            for (size_t i = 0; i < un.size(); ++i) u[split.pos_n[i]] = un[i];
            out.push_back(uint32_t(full.encode(u)));
        }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json to_json(const OrbitPartition& p) {
    nlohmann::json blocks = nlohmann::json::array();
    for (size_t b = 0; b < p.num_blocks(); ++b) {
        nlohmann::json tuples = nlohmann::json::array();
        for (uint32_t t : p.block(b)) tuples.push_back(p.space.decode(t));
        blocks.push_back({{"tuples", tuples}, {"type", p.types[b].code}});
    }
    return {{"format", "orbits"}, {"k", p.k}, {"universe", p.space.n}, {"pebbles", p.pebbles}, {"blocks", blocks}};
}

}  // namespace cfikit
