#include "cfikit/cfi.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "cfikit/error.hpp"

namespace cfikit {

TwistFunction TwistFunction::zero(const BaseGraph& g, int q) {
    TwistFunction t;
    t.q = q;
    t.values.assign(g.m(), 0);
    return t;
}

TwistFunction TwistFunction::plus(int edge, int64_t c) const {
    TwistFunction t = *this;
    t.values.at(edge) = RingValue(q, int64_t(values[edge]) + c).v;
    return t;
}

TwistFunction TwistFunction::plus(const TwistFunction& o) const {
    if (o.q != q || o.values.size() != values.size()) throw ArgumentError("twist functions do not match");
    TwistFunction t = *this;
    for (size_t e = 0; e < values.size(); ++e) t.values[e] = (values[e] + o.values[e]) & mod_mask(q);
    return t;
}

RingValue total_twist(const TwistFunction& g) {
    int64_t s = 0;
    for (uint32_t v : g.values) s += v;
    return RingValue(g.q, s);
}

PartialMap PartialMap::identity(const BaseGraph& g, int q) {
    PartialMap m;
    m.q = q;
    m.d.assign(g.n(), {});
    return m;
}

PartialMap PartialMap::then(const PartialMap& o) const {
    if (o.q != q || o.d.size() != d.size()) throw ArgumentError("partial maps do not match");
    PartialMap r = *this;
    for (size_t x = 0; x < d.size(); ++x) {
        if (o.d[x].empty()) continue;
        if (r.d[x].empty()) {
            r.d[x] = o.d[x];
            continue;
        }
        for (size_t j = 0; j < r.d[x].size(); ++j) r.d[x][j] = (r.d[x][j] + o.d[x][j]) & mod_mask(q);
    }
    return r;
}

PartialMap PartialMap::inverse() const {
    PartialMap r = *this;
    for (auto& v : r.d)
        for (auto& c : v) c = (0u - c) & mod_mask(q);
    return r;
}

bool PartialMap::is_identity() const {
    for (auto& v : d)
        for (auto c : v)
            if (c) return false;
    return true;
}

static void check_simple_path(const BaseGraph& g, const std::vector<int>& path) {
    if (path.size() < 2) throw ValidationError("path needs at least two vertices");
    std::vector<int> sorted = path;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("path is not simple");
    for (size_t i = 0; i + 1 < path.size(); ++i)
        if (!g.adjacent(path[i], path[i + 1])) throw ValidationError("path uses a non-edge");
}

PartialMap path_isomorphism(const BaseGraph& g, RingValue c, const std::vector<int>& path) {
    check_simple_path(g, path);
    PartialMap m = PartialMap::identity(g, c.q);
    for (size_t i = 1; i + 1 < path.size(); ++i) {
        int x = path[i];
        auto& d = m.d[x];
        d.assign(g.degree(x), 0);
        d[g.nbr_index(x, path[i - 1])] = c.v;
        d[g.nbr_index(x, path[i + 1])] = (-c).v;
    }
    return m;
}

PartialMap star_isomorphism(const BaseGraph& g, const std::vector<RingValue>& c,
                            const std::vector<std::vector<int>>& paths) {
    if (c.size() != paths.size() || paths.empty()) throw ValidationError("star needs one value per path");
    int q = c[0].q;
    RingValue sum(q, 0);
    for (auto& v : c) sum = sum + v;
    if (sum.v != 0) throw ValidationError("star values must sum to zero");
    int z = paths[0].back();
    std::vector<int> seen(g.n(), 0);
    for (auto& p : paths) {
        check_simple_path(g, p);
        if (p.back() != z) throw ValidationError("star paths must end at a common centre");
        for (size_t i = 0; i + 1 < p.size(); ++i)
            if (seen[p[i]]++) throw ValidationError("star paths overlap away from the centre");
    }
    PartialMap m = PartialMap::identity(g, q);
    m.d[z].assign(g.degree(z), 0);
    for (size_t i = 0; i < paths.size(); ++i) {
        auto pi = path_isomorphism(g, c[i], paths[i]);
        for (int x = 0; x < g.n(); ++x)
            if (x != z && !pi.d[x].empty()) m.d[x] = pi.d[x];
        auto& p = paths[i];
        int j = g.nbr_index(z, p[p.size() - 2]);
        m.d[z][j] = (m.d[z][j] + c[i].v) & mod_mask(q);
    }
    return m;
}

CfiStructure::CfiStructure(const BaseGraph& g, int q, TwistFunction twist)
    : CfiStructure(std::make_shared<const BaseGraph>(g), q, std::move(twist)) {}

CfiStructure::CfiStructure(std::shared_ptr<const BaseGraph> g, int q, TwistFunction twist)
    : base_(std::move(g)), q_(q), twist_(std::move(twist)) {
    if (q < 1 || q > 15) throw ValidationError("q must lie in 1..15");
    if (twist_.q != q || int(twist_.values.size()) != base_->m())
        throw ValidationError("twist function does not match the base graph");
    mask_ = mod_mask(q);
    const BaseGraph& G = *base_;
    for (int x = 0; x < G.n(); ++x) stride_ = std::max(stride_, G.degree(x));
    begin_.assign(G.n() + 1, 0);
    uint64_t total = 0;
    for (int x = 0; x < G.n(); ++x) {
        begin_[x] = int(total);
        int deg = G.degree(x);
        uint64_t sz = deg == 0 ? 1 : uint64_t(1) << (q * (deg - 1));
        if (q * (std::max(deg, 1) - 1) > 26) throw ResourceError("gadget too large");
        total += sz;
        if (total > (uint64_t(1) << 26)) throw ResourceError("CFI universe too large");
    }
    begin_[G.n()] = int(total);
    origin_.resize(total);
    coords_.assign(total * stride_, 0);
    for (int x = 0; x < G.n(); ++x) {
        int deg = G.degree(x);
        for (int v = begin_[x]; v < begin_[x + 1]; ++v) {
            origin_[v] = x;
            uint32_t idx = v - begin_[x];
            uint32_t sum = 0;
            uint16_t* c = &coords_[size_t(v) * stride_];
            for (int j = deg - 2; j >= 0; --j) {
                c[j] = idx & mask_;
                idx >>= q;
                sum += c[j];
            }
            if (deg > 0) c[deg - 1] = (0u - sum) & mask_;
        }
    }
}

CfiStructure CfiStructure::with_twist(TwistFunction twist) const {
    CfiStructure s = *this;
    if (twist.q != q_ || int(twist.values.size()) != base_->m())
        throw ValidationError("twist function does not match the base graph");
    s.twist_ = std::move(twist);
    return s;
}

uint32_t CfiStructure::coord_toward(int v, int y) const {
    int j = base_->nbr_index(origin_[v], y);
    if (j < 0) throw ArgumentError("not a neighbour of the origin");
    return coord(v, j);
}

GadgetVertex CfiStructure::vertex(int v) const {
    GadgetVertex g{origin_[v], {}};
    for (int j = 0; j < base_->degree(g.origin); ++j) g.a.push_back(coord(v, j));
    return g;
}

int CfiStructure::encode(int x, const std::vector<uint32_t>& a) const {
    int deg = base_->degree(x);
    if (int(a.size()) != deg) throw ArgumentError("value vector has wrong length");
    uint32_t sum = 0, idx = 0;
    for (int j = 0; j < deg; ++j) {
        uint32_t c = a[j] & mask_;
        sum += c;
        if (j + 1 < deg) idx = (idx << q_) | c;
    }
    if (sum & mask_) throw ValidationError("gadget vector does not sum to zero");
    return begin_[x] + int(idx);
}

int CfiStructure::translate(int v, const std::vector<uint32_t>& d) const {
    int x = origin_[v];
    int deg = base_->degree(x);
    if (int(d.size()) != deg) throw ArgumentError("translation has wrong length");
    uint32_t idx = 0, sum = 0;
    const uint16_t* c = coords(v);
    for (int j = 0; j < deg; ++j) {
        uint32_t t = (c[j] + d[j]) & mask_;
        sum += d[j];
        if (j + 1 < deg) idx = (idx << q_) | t;
    }
    if (sum & mask_) throw ValidationError("translation does not sum to zero");
    return begin_[x] + int(idx);
}

int CfiStructure::apply(const PartialMap& m, int v) const {
    const auto& d = m.d.at(origin_[v]);
    if (d.empty()) return v;
    return translate(v, d);
}

std::optional<uint32_t> CfiStructure::edge_value(int a, int b) const {
    int x = origin_[a], y = origin_[b];
    if (x == y) return std::nullopt;
    int j = base_->nbr_index(x, y);
    if (j < 0) return std::nullopt;
    int i = base_->nbr_index(y, x);
    int e = base_->incident_edge(x, j);
    return (coord(a, j) + coord(b, i) - twist_.values[e]) & mask_;
}

std::vector<Edge> CfiStructure::agree_key(int a, int b, uint32_t shift) const {
    std::vector<Edge> key;
    int x = origin_[a];
    if (origin_[b] != x) return key;
    const auto& nb = base_->neighbors(x);
    for (size_t j = 0; j < nb.size(); ++j)
        if (((coord(a, j) + shift) & mask_) == coord(b, j)) key.emplace_back(x, nb[j]);
    return key;
}

bool verify_isomorphism(const PartialMap& m, const CfiStructure& a, const CfiStructure& b) {
    if (!(a.base() == b.base()) || a.q() != b.q() || m.q != a.q() || int(m.d.size()) != a.base().n())
        return false;
    const int n = a.size();
    std::vector<int> img(n);
    std::vector<char> hit(n, 0);
    try {
        for (int v = 0; v < n; ++v) img[v] = a.apply(m, v);
    } catch (const Error&) {
        return false;
    }
    for (int v = 0; v < n; ++v) {
        if (hit[img[v]]++) return false;
        // the preorder classes are the gadgets, so they must be fixed
        if (a.origin(v) != b.origin(img[v])) return false;
    }
    const BaseGraph& G = a.base();
    for (int x = 0; x < G.n(); ++x) {
        int lo = a.gadget_begin(x), hi = lo + a.gadget_size(x);
        for (int u = lo; u < hi; ++u)
            for (int w = lo; w < hi; ++w)
                for (uint32_t s = 0; s < 2; ++s)
                    if (a.agree_key(u, w, s) != b.agree_key(img[u], img[w], s)) return false;
    }
    for (auto& [x, y] : G.edges()) {
        int xl = a.gadget_begin(x), xh = xl + a.gadget_size(x);
        int yl = a.gadget_begin(y), yh = yl + a.gadget_size(y);
        for (int u = xl; u < xh; ++u)
            for (int w = yl; w < yh; ++w)
                if (*a.edge_value(u, w) != *b.edge_value(img[u], img[w])) return false;
    }
    return true;
}

RelationalCfi strip(const CfiStructure& s) {
    RelationalCfi r;
    r.q = s.q();
    r.size = s.size();
    for (int a = 0; a < s.size(); ++a)
        for (int b = 0; b < s.size(); ++b)
            if (s.pre(a, b)) r.pre.emplace_back(a, b);
    r.re.assign(size_t(1) << s.q(), {});
    for (auto& [x, y] : s.base().edges())
        for (int a = s.gadget_begin(x); a < s.gadget_begin(x) + s.gadget_size(x); ++a)
            for (int b = s.gadget_begin(y); b < s.gadget_begin(y) + s.gadget_size(y); ++b)
                r.re[*s.edge_value(a, b)].emplace_back(a, b);
    for (auto& v : r.re) std::sort(v.begin(), v.end());
    return r;
}

RingValue cfi_query_solve(const RelationalCfi& s) {
    const int n = s.size;
    if (n <= 0) throw DecodeError("empty universe");
    if (s.re.size() != (size_t(1) << s.q)) throw DecodeError("expected one edge relation per ring element");
    // elements of one gadget have the same number of successors under the
    // preorder, and that number strictly decreases along the gadget order
    std::vector<int64_t> out(n, 0);
    for (auto& [a, b] : s.pre) {
        if (a < 0 || a >= n || b < 0 || b >= n) throw DecodeError("PRE entry out of range");
        ++out[a];
    }
    std::map<int64_t, std::vector<int>, std::greater<>> classes;
    for (int a = 0; a < n; ++a) classes[out[a]].push_back(a);
    std::vector<int> gadget(n);
    std::vector<int> rep;
    std::vector<int64_t> gsize;
    int64_t suffix = n;
    for (auto& [cnt, members] : classes) {
        if (cnt != suffix) throw DecodeError("PRE is not a preorder of gadgets");
        for (int a : members) gadget[a] = int(rep.size());
        rep.push_back(members.front());
        gsize.push_back(int64_t(members.size()));
        suffix -= int64_t(members.size());
    }
    const int k = int(rep.size());
    std::unordered_map<uint64_t, uint32_t> value;  // pair -> c
    std::map<std::pair<int, int>, int64_t> pair_count;
    for (uint32_t c = 0; c < s.re.size(); ++c)
        for (auto [a, b] : s.re[c]) {
            if (a < 0 || a >= n || b < 0 || b >= n) throw DecodeError("edge relation entry out of range");
            if (a > b) std::swap(a, b);
            int x = gadget[a], y = gadget[b];
            if (x == y) throw DecodeError("edge relation inside one gadget");
            if (!value.emplace(uint64_t(a) * n + b, c).second)
                throw DecodeError("pair appears in two edge relations");
            ++pair_count[{std::min(x, y), std::max(x, y)}];
        }
    std::vector<int> degree(k, 0);
    for (auto& [xy, cnt] : pair_count) {
        if (cnt != gsize[xy.first] * gsize[xy.second]) throw DecodeError("missing edge relation entries");
        ++degree[xy.first];
        ++degree[xy.second];
    }
    for (int x = 0; x < k; ++x) {
        int64_t expect = degree[x] == 0 ? 1 : int64_t(1) << (s.q * (degree[x] - 1));
        if (gsize[x] != expect) throw DecodeError("ragged gadget");
    }
    int64_t sum = 0;
    for (auto& [xy, cnt] : pair_count) {
        int a = rep[xy.first], b = rep[xy.second];
        if (a > b) std::swap(a, b);
        sum += value.at(uint64_t(a) * n + b);
    }
    return RingValue(s.q, -sum);
}

namespace {

nlohmann::json key_json(const std::vector<Edge>& key) {
    nlohmann::json j = nlohmann::json::array();
    for (auto& [x, y] : key) j.push_back({x, y});
    return j;
}

nlohmann::json class_relation(const CfiStructure& s, uint32_t shift) {
    std::map<std::vector<Edge>, std::vector<std::pair<int, int>>> classes;
    for (int x = 0; x < s.base().n(); ++x) {
        int lo = s.gadget_begin(x), hi = lo + s.gadget_size(x);
        for (int a = lo; a < hi; ++a)
            for (int b = lo; b < hi; ++b) {
                auto key = s.agree_key(a, b, shift);
                if (!key.empty()) classes[key].emplace_back(a, b);
            }
    }
    nlohmann::json out = nlohmann::json::array();
    for (auto& [key, pairs] : classes) out.push_back({{"key", key_json(key)}, {"pairs", pairs}});
    return out;
}

}  // namespace

nlohmann::json to_json(const CfiStructure& s, bool stripped) {
    nlohmann::json j;
    j["format"] = "cfi";
    j["stripped"] = stripped;
    j["q"] = s.q();
    j["base"] = to_json(s.base());
    if (!stripped) j["twist"] = s.twist().values;
    nlohmann::json uni = nlohmann::json::array();
    for (int v = 0; v < s.size(); ++v) {
        auto g = s.vertex(v);
        uni.push_back({g.origin, g.a});
    }
    j["universe"] = uni;
    auto r = strip(s);
    nlohmann::json rel;
    rel["PRE"] = r.pre;
    rel["RI"] = class_relation(s, 0);
    rel["RC"] = class_relation(s, 1);
    for (size_t c = 0; c < r.re.size(); ++c) rel["RE" + std::to_string(c)] = r.re[c];
    j["relations"] = rel;
    return j;
}

CfiStructure cfi_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "cfi") throw DecodeError("not a CFI document");
        if (j.at("stripped").get<bool>() || !j.contains("twist"))
            throw DecodeError("stripped CFI document has no twist function");
        int q = j.at("q").get<int>();
        BaseGraph g = graph_from_json(j.at("base"));
        TwistFunction t;
        t.q = q;
        t.values = j.at("twist").get<std::vector<uint32_t>>();
        for (auto v : t.values)
            if (v >= (1u << q)) throw DecodeError("twist value out of range");
        CfiStructure s(g, q, t);
        if (to_json(s, false) != j) throw DecodeError("relations do not match the construction");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("cfi json: ") + e.what());
    } catch (const ValidationError& e) {
        throw DecodeError(std::string("cfi json: ") + e.what());
    }
}

RelationalCfi relational_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "cfi") throw DecodeError("not a CFI document");
        RelationalCfi r;
        r.q = j.at("q").get<int>();
        if (r.q < 1 || r.q > 15) throw DecodeError("q out of range");
        r.size = int(j.at("universe").size());
        const auto& rel = j.at("relations");
        r.pre = rel.at("PRE").get<std::vector<std::pair<int, int>>>();
        r.re.assign(size_t(1) << r.q, {});
        for (size_t c = 0; c < r.re.size(); ++c) {
            auto name = "RE" + std::to_string(c);
            if (!rel.contains(name)) throw DecodeError("missing relation " + name);
            r.re[c] = rel.at(name).get<std::vector<std::pair<int, int>>>();
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("cfi json: ") + e.what());
    }
}

namespace {

// simple path from src to dst avoiding the banned vertices
std::optional<std::vector<int>> bfs_path(const BaseGraph& g, int src, int dst, const std::vector<int>& banned) {
    std::vector<int> pred(g.n(), -2);
    for (int b : banned) pred[b] = -3;
    if (pred[src] == -3 || pred[dst] == -3) return std::nullopt;
    pred[src] = -1;
    std::deque<int> queue{src};
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        if (x == dst) break;
        for (int y : g.neighbors(x))
            if (pred[y] == -2) {
                pred[y] = x;
                queue.push_back(y);
            }
    }
    if (pred[dst] == -2) return std::nullopt;
    std::vector<int> path;
    for (int x = dst; x != -1; x = pred[x]) path.push_back(x);
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

std::optional<PartialMap> find_isomorphism(const BaseGraph& g, const TwistFunction& f, const TwistFunction& h) {
    if (total_twist(f) != total_twist(h)) return std::nullopt;
    const int q = f.q;
    PartialMap m = PartialMap::identity(g, q);
    if (g.m() == 0) return m;
    // every twist difference is pushed onto one fixed edge, where the
    // differences cancel because the totals agree
    auto [r, c] = g.edges()[0];
    for (int e = 1; e < g.m(); ++e) {
        uint32_t delta = (h.values[e] - f.values[e]) & mod_mask(q);
        if (!delta) continue;
        auto [u, v] = g.edges()[e];
        std::optional<std::vector<int>> path;
        for (auto [x1, x2] : {Edge{u, v}, Edge{v, u}}) {
            for (auto [y, z] : {Edge{r, c}, Edge{c, r}}) {
                if (x2 == z || x1 == y || x1 == z) continue;
                auto mid = bfs_path(g, x2, y, {x1, z});
                if (!mid) continue;
                std::vector<int> p{x1};
                p.insert(p.end(), mid->begin(), mid->end());
                p.push_back(z);
                path = p;
                break;
            }
            if (path) break;
        }
        if (!path) return std::nullopt;
        m = m.then(path_isomorphism(g, RingValue(q, delta), *path));
    }
    return m;
}

}  // namespace cfikit
