#include "cfikit/similarity.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cfikit/error.hpp"

namespace cfikit {

namespace {

std::vector<int> reversed(std::vector<int> p) {
    std::reverse(p.begin(), p.end());
    return p;
}

std::vector<int> origins_of(const CfiStructure& s, const std::vector<int>& vs) {
    std::vector<int> o;
    o.reserve(vs.size());
    for (int v : vs) o.push_back(s.origin(v));
    return o;
}

std::string str(int64_t v) { return std::to_string(v); }

int min_distance(const BaseGraph& g, int x, const std::vector<int>& targets) {
    if (targets.empty()) return kInfinite;
    auto d = g.distances(x);
    int best = kInfinite;
    for (int y : targets)
        if (d[y] >= 0 && (best == kInfinite || d[y] < best)) best = d[y];
    return best;
}

std::string dist_str(int d) { return d == kInfinite ? "inf" : str(d); }

// edge where b's twist differs from a's, and the difference
std::pair<int, uint32_t> single_difference(const CfiStructure& a, const CfiStructure& b) {
    if (!(a.base() == b.base()) || a.q() != b.q()) throw ValidationError("structures differ in base graph or ring");
    int edge = -1;
    uint32_t diff = 0;
    for (int e = 0; e < a.base().m(); ++e) {
        uint32_t d = (b.twist().values[e] - a.twist().values[e]) & a.mask();
        if (!d) continue;
        if (edge >= 0) throw ValidationError("structures differ at more than one edge");
        edge = e;
        diff = d;
    }
    return {edge, diff};
}

// coordinates of gadget t ordered t' first, then the remaining neighbours
std::vector<int> blur_coordinate_order(const BaseGraph& g, int t, int tp) {
    std::vector<int> order{tp};
    for (int y : g.neighbors(t))
        if (y != tp) order.push_back(y);
    return order;
}

Vec translation_for(const BaseGraph& g, int t, const std::vector<int>& order, const Vec& xi) {
    Vec d(g.degree(t), 0);
    for (size_t j = 0; j < order.size(); ++j) d[g.nbr_index(t, order[j])] = xi[j];
    return d;
}

Blurer as_arity1(Blurer b) {
    b.k = 1;
    return b;
}

}  // namespace

void StarLayout::validate(const BaseGraph& g) const {
    if (paths.empty()) throw ValidationError("layout has no paths");
    if (z < 0 || z >= g.n()) throw ValidationError("layout centre out of range");
    std::vector<int> seen(g.n(), 0);
    for (auto& p : paths) {
        if (p.size() < 3) throw ValidationError("layout path too short");
        if (p.front() != z) throw ValidationError("layout paths must start at the centre");
        for (size_t i = 0; i < p.size(); ++i) {
            if (p[i] < 0 || p[i] >= g.n()) throw ValidationError("layout vertex out of range");
            if (i + 1 < p.size() && !g.adjacent(p[i], p[i + 1])) throw ValidationError("layout path uses a non-edge");
            if (i > 0 && seen[p[i]]++) throw ValidationError("layout paths overlap away from the centre");
            if (i > 0 && p[i] == z) throw ValidationError("layout path returns to the centre");
        }
    }
}

nlohmann::json StarLayout::to_json() const { return {{"z", z}, {"paths", paths}}; }

StarLayout StarLayout::from_json(const nlohmann::json& j) {
    try {
        StarLayout l;
        l.z = j.at("z").get<int>();
        l.paths = j.at("paths").get<std::vector<std::vector<int>>>();
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("bad layout: ") + e.what());
    }
}

StarLayout select_layout(const BaseGraph& g, int t, int tp, int k) {
    if (!g.adjacent(t, tp)) throw ValidationError("{t,t'} is not an edge");
    const int r = bound_r(k);
    const int len = r + 2;  // edges per path
    auto dt = g.distances(t), dtp = g.distances(tp);
    for (int z = 0; z < g.n(); ++z) {
        if (dt[z] != r + 1 || dtp[z] != r + 2) continue;
        // s_1: lexicographically least shortest path z..t, then t'
        auto dz = g.distances(z);
        std::vector<int> back{t};
        while (back.back() != z) {
            int x = back.back();
            for (int y : g.neighbors(x))
                if (dz[y] == dz[x] - 1) {
                    back.push_back(y);
                    break;
                }
        }
        StarLayout l;
        l.z = z;
        l.paths.push_back(reversed(back));
        l.paths[0].push_back(tp);
        std::vector<char> used(g.n(), 0);
        for (int v : l.paths[0]) used[v] = 1;
        // remaining paths by depth-first search, least vertices first
        for (int y0 : g.neighbors(z)) {
            if (used[y0]) continue;
            std::vector<int> path{z, y0};
            std::vector<size_t> next{0};
            used[y0] = 1;
            bool found = false;
            while (path.size() > 1) {
                if (int(path.size()) == len + 1) {
                    found = true;
                    break;
                }
                int x = path.back();
                size_t& i = next.back();
                bool pushed = false;
                while (i < g.neighbors(x).size()) {
                    int y = g.neighbors(x)[i++];
                    if (used[y] || y == z) continue;
                    used[y] = 1;
                    path.push_back(y);
                    next.push_back(0);
                    pushed = true;
                    break;
                }
                if (!pushed) {
                    used[path.back()] = 0;
                    path.pop_back();
                    next.pop_back();
                }
            }
            if (found) l.paths.push_back(path);
        }
        l.validate(g);
        return l;
    }
    throw NotFoundError("no star centre at distance r(k)+1 from t");
}

std::string ComponentClass::label() const {
    switch (kind) {
        case ComponentKind::Tip: return str(index + 1) + "-tip";
        case ComponentKind::Star: return str(index + 1) + "-star";
        case ComponentKind::StarCenter: return "star-center";
        case ComponentKind::Sky: return "sky";
    }
    return "sky";
}

ComponentClass classify_component(const BaseGraph& g, const StarLayout& layout, const std::vector<int>& c) {
    if (c.empty()) throw ValidationError("empty component");
    if (tuple_components(g, c).size() != 1) throw ValidationError("component is not connected");
    std::set<int> cs(c.begin(), c.end());
    const size_t d = layout.paths.size();
    for (size_t i = 0; i < d; ++i)
        if (cs.count(layout.e(i)) && cs.count(layout.ep(i))) return {ComponentKind::Tip, int(i)};
    for (size_t i = 0; i < d; ++i)
        if (cs.count(layout.ep(i))) return {ComponentKind::Sky, -1};
    int hit = -1, hits = 0;
    for (size_t i = 0; i < d; ++i)
        for (int v : layout.paths[i])
            if (cs.count(v)) {
                hit = int(i);
                ++hits;
                break;
            }
    if (hits == 0) return {ComponentKind::Sky, -1};
    if (hits == 1) return {ComponentKind::Star, hit};
    return {ComponentKind::StarCenter, -1};
}

StarMaps::StarMaps(const CfiStructure& s, StarLayout layout) : s_(s), layout_(std::move(layout)) {
    layout_.validate(s.base());
}

std::vector<std::pair<std::vector<int>, ComponentClass>> StarMaps::components(const Tuple& u) const {
    auto orig = origins_of(s_, u);
    std::vector<std::pair<std::vector<int>, ComponentClass>> out;
    for (auto& pos : tuple_components(s_.base(), orig)) {
        std::vector<int> verts;
        for (int i : pos) verts.push_back(orig[i]);
        out.emplace_back(pos, classify_component(s_.base(), layout_, verts));
    }
    return out;
}

const PartialMap& StarMaps::tip_map(size_t i, uint32_t a) {
    auto key = std::make_pair(i, a & s_.mask());
    auto it = tip_cache_.find(key);
    if (it == tip_cache_.end())
        it = tip_cache_
                 .emplace(key, path_isomorphism(s_.base(), RingValue(s_.q(), key.second), reversed(layout_.paths[i])))
                 .first;
    return it->second;
}

const PartialMap& StarMaps::star_map(const Vec& xi) {
    auto it = star_cache_.find(xi);
    if (it == star_cache_.end()) {
        std::vector<RingValue> c;
        std::vector<std::vector<int>> paths;
        for (size_t i = 0; i < layout_.paths.size(); ++i) {
            c.emplace_back(s_.q(), xi.at(i));
            paths.push_back(reversed(layout_.paths[i]));
        }
        it = star_cache_.emplace(xi, star_isomorphism(s_.base(), c, paths)).first;
    }
    return it->second;
}

Tuple StarMaps::tau(const Vec& a, const Tuple& u, bool inverse) {
    if (a.size() != layout_.paths.size()) throw ArgumentError("tau vector has wrong length");
    Tuple v = u;
    for (auto& [pos, cls] : components(u)) {
        if (cls.kind != ComponentKind::Tip) continue;
        uint32_t c = a[cls.index] & s_.mask();
        if (inverse) c = (0u - c) & s_.mask();
        if (!c) continue;
        const PartialMap& m = tip_map(size_t(cls.index), c);
        for (int i : pos) v[i] = s_.apply(m, u[i]);
    }
    return v;
}

Tuple StarMaps::psi(const Vec& xi, const Tuple& u) {
    if (xi.size() != layout_.paths.size()) throw ArgumentError("blurer element has wrong length");
    Tuple v = u;
    bool zero = std::all_of(xi.begin(), xi.end(), [](uint32_t x) { return x == 0; });
    if (zero) return v;
    for (auto& [pos, cls] : components(u)) {
        if (cls.kind != ComponentKind::Star && cls.kind != ComponentKind::StarCenter) continue;
        const PartialMap& m = star_map(xi);
        for (int i : pos) v[i] = s_.apply(m, u[i]);
    }
    return v;
}

Tuple tau_map(const CfiStructure& s, const StarLayout& layout, const Vec& a, const Tuple& u) {
    StarMaps m(s, layout);
    return m.tau(a, u);
}

Tuple psi_xi(const CfiStructure& s, const StarLayout& layout, const Vec& xi, const Tuple& u) {
    StarMaps m(s, layout);
    return m.psi(xi, u);
}

void Audit::add(std::string name, bool passed, std::string required, std::string actual) {
    checks.push_back({std::move(name), std::move(required), std::move(actual), passed});
}

bool Audit::audited() const {
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.passed; });
}

std::vector<std::string> Audit::failed() const {
    std::vector<std::string> out;
    for (auto& c : checks)
        if (!c.passed) out.push_back(c.name);
    return out;
}

nlohmann::json Audit::to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (auto& c : checks)
        cs.push_back({{"hypothesis", c.name}, {"required", c.required}, {"actual", c.actual}, {"passed", c.passed}});
    return {{"status", audited() ? "audited" : "unaudited"}, {"checks", cs}, {"notes", notes}};
}

namespace {

void enforce(const Audit& audit, bool allow_unaudited, const std::string& what) {
    if (audit.audited() || allow_unaudited) return;
    std::ostringstream os;
    os << what << " hypotheses failed:";
    for (auto& n : audit.failed()) os << ' ' << n;
    throw AuditError(os.str());
}

void stamp(BlockMatrix& m, const Audit& audit) {
    m.audit_status = audit.audited() ? "audited" : "unaudited";
    m.audit = audit.to_json();
}

std::shared_ptr<const OrbitPartition> rows_for(const CfiStructure& a, const std::vector<int>& pebbles, int k,
                                               const BlurOptions& opts) {
    if (opts.rows) {
        if (opts.rows->k != k || opts.rows->pebbles != pebbles || opts.rows->space.n != uint64_t(a.size()))
            throw ArgumentError("precomputed partition does not match the request");
        return opts.rows;
    }
    return std::make_shared<const OrbitPartition>(orbit_partition(a, pebbles, k));
}

// connectivity is the expensive part of every audit; remember it per graph
int cached_connectivity(const BaseGraph& g) {
    static std::vector<std::pair<BaseGraph, int>> cache;
    for (auto& [h, c] : cache)
        if (h == g) return c;
    int c = vertex_connectivity(g);
    cache.emplace_back(g, c);
    return c;
}

int cached_girth(const BaseGraph& g) {
    static std::vector<std::pair<BaseGraph, int>> cache;
    for (auto& [h, c] : cache)
        if (h == g) return c;
    int c = girth(g);
    cache.emplace_back(g, c);
    return c;
}

}  // namespace

std::pair<int, uint32_t> twist_difference(const CfiStructure& a, const CfiStructure& b) {
    return single_difference(a, b);
}

BlurResult build_S_1ary(const CfiStructure& a, const CfiStructure& b, const std::vector<int>& pebbles, int t,
                        int tp, const BlurOptions& opts) {
    const BaseGraph& g = a.base();
    if (t < 0 || t >= g.n() || !g.adjacent(t, tp)) throw ValidationError("{t,t'} is not an edge");
    auto [edge, theta] = single_difference(a, b);
    if (edge >= 0 && edge != g.edge_id(t, tp)) throw ValidationError("the twist is not at {t,t'}");
    for (int p : pebbles)
        if (p < 0 || p >= a.size()) throw ValidationError("pebble out of range");

    Blurer xi = opts.blurer ? *opts.blurer : blurer_for(1, a.q(), theta, g.degree(t));
    if (xi.d != g.degree(t) || xi.q != a.q()) throw ValidationError("blurer does not fit the gadget of t");

    Audit audit;
    const int m = int(pebbles.size());
    audit.add("q >= 2", a.q() >= 2, "2", str(a.q()));
    int kappa = cached_connectivity(g);
    audit.add("connectivity >= m+3", kappa >= m + 3, str(m + 3), str(kappa));
    audit.add("deg(t) >= 3", g.degree(t) >= 3, "3", str(g.degree(t)));
    int dist = min_distance(g, t, origins_of(a, pebbles));
    audit.add("dist(t, orig(pebbles)) >= 3", dist == kInfinite || dist >= 3, "3", dist_str(dist));
    audit.add("blurer twist equals the twist", (xi.a & a.mask()) == theta, str(theta), str(xi.a));
    auto chk = verify_blurer(as_arity1(xi));
    audit.add("blurer verified", chk.ok, "(1,q,theta,deg t)-blurer", chk.ok ? "ok" : chk.condition);
    audit.notes["t"] = t;
    audit.notes["t_prime"] = tp;
    audit.notes["theta"] = theta;
    enforce(audit, opts.allow_unaudited, "arity-1 blur");

    auto rows = rows_for(a, pebbles, 1, opts);
    auto cols = std::make_shared<const OrbitPartition>(retype(*rows, b));
    auto order = blur_coordinate_order(g, t, tp);
    std::vector<Vec> shifts;
    for (auto& x : xi.xi) shifts.push_back(translation_for(g, t, order, x));

    MatrixBuilder mb(rows, cols);
    for (int u = 0; u < a.size(); ++u) {
        if (a.origin(u) == t)
            for (auto& d : shifts) mb.toggle(uint32_t(a.translate(u, d)));
        else
            mb.toggle(uint32_t(u));
        mb.end_row();
    }
    BlurResult res{mb.finish(), audit, xi, 1};
    stamp(res.s, res.audit);
    return res;
}

bool active_region_check(const BlockMatrix& s, const CfiStructure& a, const std::vector<int>& claimed,
                         std::string* why) {
    const auto& rp = s.row_part();
    const auto& cp = s.col_part();
    const BaseGraph& g = a.base();
    auto f = type_map(rp, cp);
    std::vector<char> in(g.n(), 0);
    for (int x : claimed) in.at(x) = 1;
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };

    // per block: positions of the components inside the claimed set
    std::vector<std::vector<int>> inside(rp.num_blocks());
    std::vector<std::vector<std::vector<int>>> comps(rp.num_blocks());
    for (size_t b = 0; b < rp.num_blocks(); ++b) {
        auto orig = origins_of(a, rp.space.decode(rp.block(b)[0]));
        comps[b] = tuple_components(g, orig);
        for (auto& c : comps[b])
            if (std::all_of(c.begin(), c.end(), [&](int i) { return in[orig[i]]; }))
                inside[b].insert(inside[b].end(), c.begin(), c.end());
        std::sort(inside[b].begin(), inside[b].end());
    }

    // condition 1: active components lie in the claimed set
    for (uint64_t r = 0; r < s.nrows(); ++r) {
        size_t b = rp.block_of[r];
        Tuple u = rp.space.decode(r);
        for (uint32_t c : s.row(r)) {
            if (f[b] != int64_t(cp.block_of[c])) return fail("matrix is not orbit-diagonal at row " + str(r));
            Tuple v = cp.space.decode(c);
            for (auto& comp : comps[b]) {
                bool differs = std::any_of(comp.begin(), comp.end(), [&](int i) { return u[i] != v[i]; });
                bool claimed_comp = std::all_of(comp.begin(), comp.end(), [&](int i) { return in[a.origin(u[i])]; });
                if (differs && !claimed_comp) return fail("active on a component outside the claimed set, row " + str(r));
            }
        }
    }

    // condition 2: entries depend only on the claimed components
    std::map<std::vector<int64_t>, char> seen;
    uint64_t work = 0;
    for (uint64_t r = 0; r < s.nrows(); ++r) {
        size_t b = rp.block_of[r];
        if (f[b] < 0) continue;
        Tuple u = rp.space.decode(r);
        const auto& pos = inside[b];
        std::vector<int> sizes;
        for (int i : pos) sizes.push_back(a.gadget_size(a.origin(u[i])));
        std::vector<int> digit(pos.size(), 0);
        Tuple v = u;
        for (;;) {
            if (++work > (uint64_t(1) << 27)) throw ResourceError("active region check too large");
            for (size_t j = 0; j < pos.size(); ++j) v[pos[j]] = a.gadget_begin(a.origin(u[pos[j]])) + digit[j];
            uint64_t c = cp.space.encode(v);
            if (int64_t(cp.block_of[c]) == f[b]) {
                std::vector<int64_t> key;
                key.push_back(int64_t(pos.size()));
                for (int i : pos) key.push_back(i);
                for (int i : pos) key.push_back(u[i]);
                for (int i : pos) key.push_back(v[i]);
                char val = s.get(r, c) ? 1 : 0;
                auto [it, fresh] = seen.emplace(std::move(key), val);
                if (!fresh && it->second != val)
                    return fail("entry depends on components outside the claimed set, row " + str(r));
            }
            size_t j = 0;
            while (j < pos.size() && ++digit[j] == sizes[j]) digit[j++] = 0;
            if (j == pos.size()) break;
        }
    }
    return true;
}

namespace {

// Builds S^xi for many xi, sharing the per-edge factors.
class XiBuilder {
public:
    XiBuilder(const CfiStructure& a, std::vector<int> sub_pebbles, const StarLayout& layout, int k, Vec fix,
              bool allow_unaudited)
        : a_(a), pebbles_(std::move(sub_pebbles)), layout_(layout), k_(k), fix_(std::move(fix)),
          allow_(allow_unaudited) {
        rows_ = std::make_shared<const OrbitPartition>(orbit_partition(a_, pebbles_, k_ - 1));
    }

    std::shared_ptr<const OrbitPartition> rows() const { return rows_; }

    // differences c_j = fix_j - xi_j at the tip edges
    Vec differences(const Vec& xi) const {
        Vec c(xi.size());
        for (size_t j = 0; j < xi.size(); ++j) c[j] = (fix_[j] - xi[j]) & a_.mask();
        return c;
    }

    const BlurResult& product(const Vec& xi) {
        Vec c = differences(xi);
        auto it = products_.find(c);
        if (it != products_.end()) return it->second;
        const BaseGraph& g = a_.base();
        TwistFunction tw = a_.twist();
        BlurResult res{BlockMatrix::identity(rows_, rows_), {}, {}, 0};
        nlohmann::json factors = nlohmann::json::array();
        bool all_audited = true;
        for (size_t j = 0; j < c.size(); ++j) {
            int e = g.edge_id(layout_.e(j), layout_.ep(j));
            TwistFunction next = tw.plus(e, c[j]);
            if (c[j]) {
                const BlurResult& f = factor(j, c[j], tw, next);
                res.s = multiply(res.s, f.s);
                ++res.factors;
                all_audited = all_audited && f.s.audit_status == "audited";
                factors.push_back({{"edge", {layout_.e(j), layout_.ep(j)}}, {"twist", c[j]}, {"audit", f.audit.to_json()}});
            }
            tw = next;
        }
        res.audit.add("per-edge blurs audited", all_audited, "all", all_audited ? "all" : "some unaudited");
        res.audit.notes["factors"] = factors;
        stamp(res.s, res.audit);
        return products_.emplace(c, std::move(res)).first->second;
    }

private:
    const BlurResult& factor(size_t j, uint32_t c, const TwistFunction& from, const TwistFunction& to) {
        auto key = std::make_pair(j, c);
        auto it = factors_.find(key);
        if (it != factors_.end()) return it->second;
        CfiStructure sa = a_.with_twist(from), sb = a_.with_twist(to);
        BlurOptions o;
        o.allow_unaudited = allow_;
        o.rows = rows_;
        BlurResult r = build_S_kary(sa, sb, pebbles_, layout_.e(j), layout_.ep(j), k_ - 1, o);
        // the product is indexed over A's partition throughout
        BlockMatrix s(rows_, rows_);
        MatrixBuilder mb(rows_, rows_);
        for (uint64_t i = 0; i < r.s.nrows(); ++i) {
            for (uint32_t col : r.s.row(i)) mb.toggle(col);
            mb.end_row();
        }
        s = mb.finish();
        s.audit_status = r.s.audit_status;
        s.audit = r.s.audit;
        r.s = std::move(s);
        return factors_.emplace(key, std::move(r)).first->second;
    }

    const CfiStructure& a_;
    std::vector<int> pebbles_;
    const StarLayout& layout_;
    int k_;
    Vec fix_;
    bool allow_;
    std::shared_ptr<const OrbitPartition> rows_;
    std::map<std::pair<size_t, uint32_t>, BlurResult> factors_;
    std::map<Vec, BlurResult> products_;
};

void audit_neighbourhoods(Audit& audit, const BaseGraph& g, const StarLayout& layout, int radius) {
    std::vector<int> owner(g.n(), -1);
    bool disjoint = true;
    for (size_t i = 0; i < layout.paths.size() && disjoint; ++i) {
        auto d = g.distances(layout.e(i));
        for (int x = 0; x < g.n(); ++x)
            if (d[x] >= 0 && d[x] <= radius) {
                if (owner[x] >= 0) disjoint = false;
                owner[x] = int(i);
            }
    }
    audit.add("tip neighbourhoods disjoint", disjoint, "radius " + str(radius), disjoint ? "disjoint" : "overlap");
}

}  // namespace

BlurResult build_S_xi(const CfiStructure& a, const std::vector<int>& pebbles_with_pz, const Vec& xi, const Vec& fix,
                      const StarLayout& layout, int k, const BlurOptions& opts) {
    if (k < 2) throw ArgumentError("S^xi needs arity at least 2");
    layout.validate(a.base());
    if (xi.size() != layout.paths.size() || fix.size() != xi.size()) throw ArgumentError("vector length mismatch");
    XiBuilder xb(a, pebbles_with_pz, layout, k, fix, opts.allow_unaudited);
    BlurResult r = xb.product(xi);
    audit_neighbourhoods(r.audit, a.base(), layout, bound_r(k));
    stamp(r.s, r.audit);
    return r;
}

BlurResult build_S_kary(const CfiStructure& a, const CfiStructure& b, const std::vector<int>& pebbles, int t, int tp,
                        int k, const BlurOptions& opts) {
    if (k < 1) throw ArgumentError("arity must be positive");
    if (k == 1) return build_S_1ary(a, b, pebbles, t, tp, opts);
    const BaseGraph& g = a.base();
    if (!g.adjacent(t, tp)) throw ValidationError("{t,t'} is not an edge");
    auto [edge, theta] = single_difference(a, b);
    if (edge >= 0 && edge != g.edge_id(t, tp)) throw ValidationError("the twist is not at {t,t'}");
    for (int p : pebbles)
        if (p < 0 || p >= a.size()) throw ValidationError("pebble out of range");

    StarLayout layout = opts.layout ? *opts.layout : select_layout(g, t, tp, k);
    layout.validate(g);
    if (layout.e(0) != t || layout.ep(0) != tp) throw ValidationError("first layout path must end in t, t'");
    const int d = int(layout.paths.size());
    Blurer xi = opts.blurer ? *opts.blurer : blurer_for(k, a.q(), theta, d);
    if (xi.d != d || xi.q != a.q()) throw ValidationError("blurer does not match the layout");

    const int m = int(pebbles.size());
    const int r = bound_r(k);
    Audit audit;
    audit.add("q >= q(k)", a.q() >= bound_q(k), str(bound_q(k)), str(a.q()));
    audit.add("twist divisible by 2^theta(k)", theta == 0 || valuation(theta, a.q()) >= bound_theta(k),
              "2^" + str(bound_theta(k)), str(theta));
    audit.add("star degree >= d(k,m)", d >= bound_d(k, m), str(bound_d(k, m)), str(d));
    int gi = cached_girth(g);
    audit.add("girth >= 2r(k+1)", gi == kInfinite || gi >= 2 * bound_r(k + 1), str(2 * bound_r(k + 1)), dist_str(gi));
    int kappa = cached_connectivity(g);
    audit.add("connectivity >= m+2k+1", kappa >= m + 2 * k + 1, str(m + 2 * k + 1), str(kappa));
    int dist = min_distance(g, t, origins_of(a, pebbles));
    audit.add("dist(t, orig(pebbles)) > r(k+1)", dist == kInfinite || dist > bound_r(k + 1), str(bound_r(k + 1) + 1),
              dist_str(dist));
    bool radii = true;
    auto dz = g.distances(layout.z);
    for (int i = 0; i < d; ++i)
        radii = radii && dz[layout.e(i)] == r + 1 && int(layout.paths[i].size()) == r + 3;
    audit.add("tips at distance r(k)+1 from the centre", radii, str(r + 1), radii ? str(r + 1) : "other");
    audit.add("blurer twist equals the twist", (xi.a & a.mask()) == theta, str(theta), str(xi.a));
    Blurer as_k = xi;
    as_k.k = k;
    auto chk = verify_blurer(as_k);
    audit.add("blurer verified", chk.ok, "(k,q,theta,d)-blurer", chk.ok ? "ok" : chk.condition);
    bool coarse = true;
    for (auto& x : xi.xi)
        for (uint32_t v : x) coarse = coarse && (v == 0 || valuation(v, a.q()) >= bound_theta(k - 1));
    audit.add("blurer entries divisible by 2^theta(k-1)", coarse, "2^" + str(bound_theta(k - 1)), coarse ? "yes" : "no");
    audit_neighbourhoods(audit, g, layout, r);
    audit.notes["layout"] = layout.to_json();
    audit.notes["theta"] = theta;
    audit.notes["blurer"] = xi.to_json();
    enforce(audit, opts.allow_unaudited, "arity-k blur");

    auto rows = rows_for(a, pebbles, k, opts);
    auto cols = std::make_shared<const OrbitPartition>(retype(*rows, b));
    auto target = type_map(*rows, *cols);

    const int z = layout.z;
    const int pz = a.gadget_begin(z);
    std::vector<int> sub_pebbles = pebbles;
    sub_pebbles.push_back(pz);
    Vec fix = xi.fix();
    fix.resize(d, 0);
    fix[0] = theta;

    StarMaps maps(a, layout);
    std::unique_ptr<XiBuilder> xb;
    std::vector<const BlurResult*> sxi(xi.xi.size(), nullptr);
    auto product_for = [&](size_t i) -> const BlockMatrix& {
        if (!xb) xb = std::make_unique<XiBuilder>(a, sub_pebbles, layout, k, fix, opts.allow_unaudited);
        if (!sxi[i]) sxi[i] = &xb->product(xi.xi[i]);
        return sxi[i]->s;
    };

    const TupleSpace& sp = rows->space;
    TupleSpace sub(sp.n, k - 1);
    uint64_t anomalies = 0, blurable_rows = 0, other_rows = 0;
    MatrixBuilder mb(rows, cols);
    for (uint64_t row = 0; row < sp.size(); ++row) {
        Tuple u = sp.decode(row);
        int64_t want = target[rows->block_of[row]];
        auto place = [&](const Tuple& v) {
            uint64_t c = sp.encode(v);
            if (want >= 0 && int64_t(cols->block_of[c]) == want)
                mb.toggle(uint32_t(c));
            else
                ++anomalies;
        };
        int zpos = -1;
        for (int i = 0; i < k && zpos < 0; ++i)
            if (a.origin(u[i]) == z) zpos = i;
        if (zpos < 0) {
            ++blurable_rows;
            for (auto& x : xi.xi) place(maps.tau(fix, maps.psi(x, u)));
        } else {
            ++other_rows;
            Tuple rest;
            for (int i = 0; i < k; ++i)
                if (i != zpos) rest.push_back(u[i]);
            for (size_t i = 0; i < xi.xi.size(); ++i) {
                const Vec& x = xi.xi[i];
                int vz = maps.tau(x, maps.psi(x, Tuple{u[zpos]}))[0];
                const BlockMatrix& s = product_for(i);
                uint64_t w = sub.encode(maps.psi(x, rest));
                for (uint32_t w2 : s.row(w)) {
                    Tuple v = maps.tau(x, sub.decode(w2));
                    v.insert(v.begin() + zpos, vz);
                    place(v);
                }
            }
        }
        mb.end_row();
    }

    nlohmann::json factor_audits = nlohmann::json::array();
    bool inner_ok = true;
    for (size_t i = 0; i < sxi.size(); ++i)
        if (sxi[i]) {
            inner_ok = inner_ok && sxi[i]->s.audit_status == "audited";
            factor_audits.push_back({{"xi", xi.xi[i]}, {"factors", sxi[i]->factors}, {"audit", sxi[i]->audit.to_json()}});
        }
    audit.add("recursive blurs audited", inner_ok, "all", inner_ok ? "all" : "some unaudited");
    audit.add("entries stay in tau(P) blocks", anomalies == 0, "0 dropped", str(int64_t(anomalies)) + " dropped");
    audit.notes["blurable_rows"] = blurable_rows;
    audit.notes["non_blurable_rows"] = other_rows;
    audit.notes["dropped_entries"] = anomalies;
    audit.notes["s_xi"] = factor_audits;

    BlurResult res{mb.finish(), audit, xi, 0};
    for (auto* p : sxi)
        if (p) res.factors += p->factors;
    stamp(res.s, res.audit);
    return res;
}

}  // namespace cfikit
