#include "cfikit/blurer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "cfikit/error.hpp"
#include "cfikit/gf2.hpp"
#include "cfikit/zmod.hpp"

namespace cfikit {

namespace {

std::vector<std::vector<int>> subsets(int d, int k) {
    std::vector<std::vector<int>> out;
    if (k > d || k < 0) return out;
    std::vector<int> cur(k);
    for (int i = 0; i < k; ++i) cur[i] = i;
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[i] == d - k + i) --i;
        if (i < 0) break;
        ++cur[i];
        for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

Vec restrict_to(const Vec& v, const std::vector<int>& n) {
    Vec r;
    for (int i : n) r.push_back(v[i]);
    return r;
}

// keep each vector with odd multiplicity, sorted
std::vector<Vec> normalize(std::vector<Vec> xi) {
    std::sort(xi.begin(), xi.end());
    std::vector<Vec> out;
    for (size_t i = 0; i < xi.size();) {
        size_t j = i;
        while (j < xi.size() && xi[j] == xi[i]) ++j;
        if ((j - i) & 1) out.push_back(xi[i]);
        i = j;
    }
    return out;
}

Blurer checked(Blurer b, const std::string& step) {
    b.provenance.push_back(step);
    auto c = verify_blurer(b);
    if (!c.ok) throw AuditError(step + " does not give a blurer: " + c.condition);
    return b;
}

// the unique odd restriction to the first k coordinates, if its tail is zero
std::optional<uint32_t> infer_a(const std::vector<Vec>& xi, int k) {
    std::map<Vec, int> parity;
    std::vector<int> n(k);
    for (int i = 0; i < k; ++i) n[i] = i;
    for (auto& v : xi) parity[restrict_to(v, n)] ^= 1;
    std::optional<Vec> odd;
    for (auto& [b, p] : parity)
        if (p) {
            if (odd) return std::nullopt;
            odd = b;
        }
    if (!odd) return std::nullopt;
    for (int i = 1; i < k; ++i)
        if ((*odd)[i]) return std::nullopt;
    return (*odd)[0];
}

}  // namespace

Vec Blurer::fix() const {
    Vec f(d, 0);
    if (d > 0) f[0] = a;
    return f;
}

nlohmann::json Blurer::to_json() const {
    return {{"format", "blurer"}, {"k", k}, {"q", q}, {"a", a}, {"d", d}, {"tuples", xi}, {"provenance", provenance}};
}

Blurer Blurer::from_json(const nlohmann::json& j) {
    try {
        Blurer b;
        b.k = j.at("k").get<int>();
        b.q = j.at("q").get<int>();
        b.a = j.at("a").get<uint32_t>();
        b.d = j.at("d").get<int>();
        b.xi = j.at("tuples").get<std::vector<Vec>>();
        if (j.contains("provenance")) b.provenance = j.at("provenance").get<std::vector<std::string>>();
        if (b.q < 1 || b.q > 15 || b.d < 1 || b.k < 1) throw DecodeError("blurer parameters out of range");
        if (b.a > mod_mask(b.q)) throw DecodeError("blurer target outside Z_2^q");
        for (auto& v : b.xi) {
            if (int(v.size()) != b.d) throw DecodeError("blurer tuple length differs from d");
            for (uint32_t x : v)
                if (x > mod_mask(b.q)) throw DecodeError("blurer entry outside Z_2^q");
        }
        std::sort(b.xi.begin(), b.xi.end());
        if (std::adjacent_find(b.xi.begin(), b.xi.end()) != b.xi.end()) throw DecodeError("repeated blurer tuple");
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("blurer json: ") + e.what());
    }
}

int count_vects(const std::vector<Vec>& xi, const std::vector<int>& n, const Vec& b) {
    if (n.size() != b.size()) throw ArgumentError("index set and pattern differ in length");
    int c = 0;
    for (auto& v : xi) {
        bool match = true;
        for (size_t i = 0; i < n.size() && match; ++i) match = v.at(n[i]) == b[i];
        c ^= match ? 1 : 0;
    }
    return c;
}

nlohmann::json BlurerCheck::to_json() const {
    nlohmann::json j{{"ok", ok}};
    if (!ok) {
        j["condition"] = condition;
        j["N"] = n;
        j["b"] = b;
    }
    return j;
}

BlurerCheck verify_blurer(const Blurer& b) {
    BlurerCheck r;
    auto fail = [&](std::string c, std::vector<int> n = {}, Vec v = {}) {
        r.ok = false;
        r.condition = std::move(c);
        r.n = std::move(n);
        r.b = std::move(v);
        return r;
    };
    if (b.k < 1 || b.k > b.d) return fail("arity must lie between 1 and d");
    const uint32_t mask = mod_mask(b.q);
    if (b.a > mask) return fail("a outside the ring");
    std::vector<Vec> sorted = b.xi;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return fail("repeated vector");
    for (auto& v : b.xi) {
        if (int(v.size()) != b.d) return fail("vector of wrong length", {}, v);
        uint32_t s = 0;
        for (auto c : v) {
            if (c > mask) return fail("entry outside the ring", {}, v);
            s += c;
        }
        if (s & mask) return fail("vector does not sum to zero", {}, v);
    }
    const Vec fix = b.fix();
    for (auto& n : subsets(b.d, b.k)) {
        std::map<Vec, int> parity;
        for (auto& v : b.xi) parity[restrict_to(v, n)] ^= 1;
        Vec want = restrict_to(fix, n);
        if (!parity[want]) {
            bool first = n[0] == 0;
            return fail(first ? "pattern (a,0,...,0) occurs an even number of times"
                              : "zero pattern occurs an even number of times",
                        n, want);
        }
        for (auto& [pat, p] : parity)
            if (p && pat != want) return fail("another pattern occurs an odd number of times", n, pat);
    }
    return r;
}

Blurer arity1_blurer(int q, int d) {
    if (q < 2 || d < 3) throw ArgumentError("arity-1 family needs q >= 2 and d >= 3");
    Blurer b;
    b.k = 1;
    b.q = q;
    b.d = d;
    uint32_t s = uint32_t(1) << (q - 2);
    b.a = 2 * s;
    for (Vec v : {Vec{3, 0, 1}, Vec{3, 1, 0}, Vec{2, 1, 1}}) {
        Vec w(d, 0);
        for (int i = 0; i < 3; ++i) w[i] = (v[i] * s) & mod_mask(q);
        b.xi.push_back(w);
    }
    b.xi = normalize(b.xi);
    return checked(b, "arity1(q=" + std::to_string(q) + ",d=" + std::to_string(d) + ")");
}

Blurer kary_blurer(int i) {
    if (i < 2 || i > 5) throw ArgumentError("k-ary family supported for 2 <= i <= 5");
    Blurer b;
    b.q = i;
    b.k = (1 << (i - 1)) - 1;
    b.a = uint32_t(1) << (i - 1);
    b.d = (1 << i) - 1;
    const int tail = b.d - 1;
    const uint32_t mask = mod_mask(i);
    // tails of 0/1 entries with 2^{i-1} ones, or 2^{i-1}-1 ones
    for (uint32_t bits = 0; bits < (1u << tail); ++bits) {
        int ones = __builtin_popcount(bits);
        uint32_t head;
        if (ones == (1 << (i - 1)))
            head = b.a;
        else if (ones == (1 << (i - 1)) - 1)
            head = b.a + 1;
        else
            continue;
        Vec v(b.d, 0);
        v[0] = head & mask;
        for (int j = 0; j < tail; ++j) v[1 + j] = bits >> (tail - 1 - j) & 1;
        b.xi.push_back(v);
    }
    b.xi = normalize(b.xi);
    return checked(b, "kary(i=" + std::to_string(i) + ")");
}

Blurer pad(const Blurer& b, int d) {
    if (d < b.d) throw ArgumentError("pad cannot shrink");
    Blurer r = b;
    r.d = d;
    for (auto& v : r.xi) v.resize(d, 0);
    return checked(r, "pad(" + std::to_string(d) + ")");
}

Blurer restrict_k(const Blurer& b, int k) {
    if (k < 1 || k > b.k) throw ArgumentError("restrict_k needs 1 <= k' <= k");
    Blurer r = b;
    r.k = k;
    return checked(r, "restrict_k(" + std::to_string(k) + ")");
}

Blurer scale(const Blurer& b, uint32_t c) {
    Blurer r = b;
    const uint32_t mask = mod_mask(b.q);
    r.a = (b.a * c) & mask;
    for (auto& v : r.xi)
        for (auto& x : v) x = (x * c) & mask;
    r.xi = normalize(r.xi);
    return checked(r, "scale(" + std::to_string(c & mask) + ")");
}

Blurer embed(const Blurer& b, int l) {
    if (l < 0 || b.q + l > 15) throw ArgumentError("embed out of range");
    Blurer r = b;
    r.q = b.q + l;
    r.a = b.a << l;
    for (auto& v : r.xi)
        for (auto& x : v) x <<= l;
    return checked(r, "embed(" + std::to_string(l) + ")");
}

Blurer larger_field(const Blurer& b, int l, uint32_t c) {
    if (l < 0 || b.q + l > 15) throw ArgumentError("larger_field out of range");
    const int nq = b.q + l;
    const uint32_t mask = mod_mask(nq);
    auto lift = [&](uint32_t mult) {
        Blurer r = b;
        r.q = nq;
        for (auto& v : r.xi) {
            int64_t tail = 0;
            for (size_t j = 1; j < v.size(); ++j) {
                tail += v[j];
                v[j] = (v[j] * mult) & mask;
            }
            v[0] = uint32_t(-int64_t(mult) * tail) & mask;
        }
        r.xi = normalize(r.xi);
        auto a = infer_a(r.xi, r.k);
        if (!a) return std::optional<Blurer>();
        r.a = *a;
        r.provenance.push_back("larger_field(l=" + std::to_string(l) + ",c=" + std::to_string(mult) + ")");
        if (!verify_blurer(r).ok) return std::optional<Blurer>();
        return std::optional<Blurer>(r);
    };
    if (c != 0) {
        auto r = lift(c);
        if (!r) throw AuditError("larger_field with the given multiplier does not give a blurer");
        return *r;
    }
    const int e = l - b.q + 1;
    if (e >= 1 && e < 31) {
        uint32_t def = ((uint32_t(1) << e) - 1) & mask;
        if (def & 1)
            if (auto r = lift(def)) return *r;
    }
    for (uint32_t mult = mask; mult >= 1 && mult <= mask; mult -= 2)
        if (auto r = lift(mult)) return *r;
    throw AuditError("no odd multiplier lifts the blurer");
}

int bound_i(int k) {
    int i = 1;
    while ((1 << i) - 1 < k) ++i;
    return i;
}

int bound_r(int k) { return k == 1 ? 1 : std::max(4 * bound_r(k - 1) + 2, 2 * k + 2); }
int bound_theta(int k) { return k == 1 ? 1 : bound_i(k) + bound_theta(k - 1); }
int bound_q(int k) { return 1 + bound_theta(k); }
int bound_d(int k, int m) {
    return k == 1 ? 3 + m : std::max((1 << (bound_i(k) + 1)) + m - 1, bound_d(k - 1, m + 1));
}

namespace {

// scale the family so that its a equals target; both must share the valuation
std::optional<Blurer> match_target(const Blurer& b, uint32_t target) {
    int vb = valuation(b.a, b.q), vt = valuation(target, b.q);
    if (vb != vt || vb == b.q) return std::nullopt;
    uint32_t unit = inverse_odd(b.a >> vb, b.q - vb) * (target >> vt);
    unit &= mod_mask(b.q - vb);
    if (unit == 1) return b;
    return scale(b, unit);
}

std::optional<Blurer> recipe(int k, int q, uint32_t target, int d) {
    const int v = valuation(target, q);
    if (k == 1) {
        // (1,2,2,3) lifted to Z_{2^{q-v+1}}, then shifted up by v-1
        if (v < 1 || d < 3) return std::nullopt;
        Blurer b = kary_blurer(2);
        b = restrict_k(b, 1);
        int field = q - v + 1;
        if (field > 2) b = larger_field(b, field - 2);
        if (v > 1) b = embed(b, v - 1);
        if (d > b.d) b = pad(b, d);
        return match_target(b, target);
    }
    const int i = bound_i(k);
    const int e = v - i;
    if (e < 0 || q - e < i + 1 || d < (1 << (i + 1)) - 1) return std::nullopt;
    Blurer b = kary_blurer(i + 1);
    if (q - e > i + 1) b = larger_field(b, q - e - (i + 1));
    if (e > 0) b = embed(b, e);
    b = restrict_k(b, k);
    if (d > b.d) b = pad(b, d);
    return match_target(b, target);
}

}  // namespace

Blurer blurer_for(int k, int q, uint32_t target, int d, uint64_t search_budget) {
    if (k < 1 || d < k || q < 1) throw ArgumentError("blurer parameters out of range");
    target &= mod_mask(q);
    if (target == 0) {
        Blurer b;
        b.k = k;
        b.q = q;
        b.a = 0;
        b.d = d;
        b.xi = {Vec(d, 0)};
        return checked(b, "zero");
    }
    try {
        if (auto b = recipe(k, q, target, d)) return *b;
    } catch (const AuditError&) {
        // a recipe step failed verification; try the search instead
    }
    if (auto b = search_blurer(k, q, target, d, search_budget)) return *b;
    throw NotFoundError("no blurer found for the requested parameters");
}

std::optional<Blurer> search_blurer(int k, int q, uint32_t a, int d, uint64_t budget) {
    if (k < 1 || d < k || q < 1 || q > 15) throw ArgumentError("blurer parameters out of range");
    a &= mod_mask(q);
    const int v = valuation(a, q);
    // try subrings 2^s Z first, largest s first: fewer variables
    for (int s = std::min(v, q - 1); s >= 0; --s) {
        const int qq = q - s;
        const uint32_t aa = a >> s;
        const double nvars = std::pow(2.0, double(qq) * (d - 1));
        if (nvars > double(budget)) continue;
        const uint32_t mask = mod_mask(qq);
        std::vector<Vec> vars;
        for (uint64_t idx = 0; idx < uint64_t(nvars); ++idx) {
            Vec w(d, 0);
            uint64_t r = idx;
            uint32_t sum = 0;
            for (int j = d - 2; j >= 0; --j) {
                w[j] = uint32_t(r) & mask;
                r >>= qq;
                sum += w[j];
            }
            w[d - 1] = (0u - sum) & mask;
            vars.push_back(w);
        }
        Vec fix(d, 0);
        fix[0] = aa;
        auto sets = subsets(d, k);
        std::map<std::pair<size_t, Vec>, size_t> row_of;
        std::vector<std::vector<uint32_t>> rows_vars;
        std::vector<int> rhs;
        for (size_t ni = 0; ni < sets.size(); ++ni) {
            auto key = std::make_pair(ni, restrict_to(fix, sets[ni]));
            row_of[key] = rows_vars.size();
            rows_vars.push_back({});
            rhs.push_back(1);
        }
        for (size_t x = 0; x < vars.size(); ++x)
            for (size_t ni = 0; ni < sets.size(); ++ni) {
                auto key = std::make_pair(ni, restrict_to(vars[x], sets[ni]));
                auto it = row_of.find(key);
                if (it == row_of.end()) {
                    it = row_of.emplace(key, rows_vars.size()).first;
                    rows_vars.push_back({});
                    rhs.push_back(0);
                }
                rows_vars[it->second].push_back(uint32_t(x));
            }
        const size_t nv = vars.size();
        BitMatrix m(rows_vars.size(), nv + 1);
        for (size_t r = 0; r < rows_vars.size(); ++r) {
            for (uint32_t x : rows_vars[r]) m.flip(r, x);
            if (rhs[r]) m.set(r, nv, true);
        }
        // reduced row echelon form, free variables set to zero
        std::vector<size_t> pivot_col;
        size_t r = 0;
        for (size_t c = 0; c < nv && r < m.rows(); ++c) {
            size_t p = r;
            while (p < m.rows() && !m.get(p, c)) ++p;
            if (p == m.rows()) continue;
            if (p != r) std::swap_ranges(m.row(p), m.row(p) + m.words(), m.row(r));
            for (size_t i = 0; i < m.rows(); ++i)
                if (i != r && m.get(i, c))
                    for (size_t w = 0; w < m.words(); ++w) m.row(i)[w] ^= m.row(r)[w];
            pivot_col.push_back(c);
            ++r;
        }
        bool consistent = true;
        for (size_t i = r; i < m.rows(); ++i)
            if (m.get(i, nv)) consistent = false;
        if (!consistent) continue;
        Blurer b;
        b.k = k;
        b.q = qq;
        b.a = aa;
        b.d = d;
        for (size_t i = 0; i < pivot_col.size(); ++i)
            if (m.get(i, nv)) b.xi.push_back(vars[pivot_col[i]]);
        b.xi = normalize(b.xi);
        b.provenance.push_back("search(k=" + std::to_string(k) + ",q=" + std::to_string(qq) + ",a=" +
                               std::to_string(aa) + ",d=" + std::to_string(d) + ")");
        if (!verify_blurer(b).ok) continue;
        if (s > 0) b = embed(b, s);
        return b;
    }
    return std::nullopt;
}

bool blurer_sum_check(const Blurer& b, const std::vector<int>& K, const std::function<int(const Vec&)>& f) {
    if (int(K.size()) != b.k) throw ArgumentError("index set must have k elements");
    int sum = 0;
    for (auto& v : b.xi) sum ^= f(restrict_to(v, K)) & 1;
    return sum == (f(restrict_to(b.fix(), K)) & 1);
}

boost::multiprecision::cpp_int binomial(unsigned n, unsigned m) {
    if (m > n) return 0;
    boost::multiprecision::cpp_int r = 1;
    for (unsigned i = 1; i <= m; ++i) r = r * (n - m + i) / i;
    return r;
}

bool binomial_is_odd(unsigned n, unsigned m) { return m <= n && (m & ~n) == 0; }

}  // namespace cfikit
