#include "cfikit/game.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "cfikit/error.hpp"

namespace cfikit {

std::vector<int> GameState::placed_labels() const {
    std::vector<int> out;
    for (int i = 0; i < m; ++i)
        if (peb_a[i] >= 0) out.push_back(i);
    return out;
}

GameState new_game(std::shared_ptr<const CfiStructure> a, std::shared_ptr<const CfiStructure> b, int k, int m,
                   const std::vector<std::pair<int, int>>& initial) {
    if (k < 1 || m < 2 * k) throw ArgumentError("the game needs 2k <= m");
    if (int(initial.size()) > m) throw ArgumentError("more initial pebbles than labels");
    GameState st;
    st.a = std::move(a);
    st.b = std::move(b);
    st.k = k;
    st.m = m;
    st.peb_a.assign(m, -1);
    st.peb_b.assign(m, -1);
    if (st.a->size() != st.b->size()) {
        st.over = true;
        st.winner = "spoiler";
        st.reason = "universes differ in size";
        return st;
    }
    for (size_t i = 0; i < initial.size(); ++i) {
        auto [x, y] = initial[i];
        if (x < 0 || x >= st.a->size() || y < 0 || y >= st.b->size()) throw ValidationError("pebble out of range");
        st.peb_a[i] = x;
        st.peb_b[i] = y;
    }
    return st;
}

void pick_up(GameState& st, const std::vector<int>& labels) {
    if (int(labels.size()) != 2 * st.k) throw ArgumentError("Spoiler lifts exactly 2k pebbles");
    std::set<int> seen;
    for (int l : labels) {
        if (l < 0 || l >= st.m || !seen.insert(l).second) throw ArgumentError("bad pebble label");
        st.peb_a[l] = st.peb_b[l] = -1;
    }
    st.picked = labels;
}

namespace {

std::vector<int> staying(const GameState& st, const std::vector<int>& peb) {
    std::vector<int> out;
    for (int l : st.placed_labels()) out.push_back(peb[l]);
    return out;
}

// translation family sigma: B -> CFI(g_A + theta at e) with sigma(w_B) = w_A
struct Alignment {
    PartialMap sigma;
    uint32_t theta = 0;
};

Alignment align(const CfiStructure& a, const CfiStructure& b, const std::vector<int>& wa, const std::vector<int>& wb,
                int edge) {
    const BaseGraph& g = a.base();
    std::vector<int> offset(g.n() + 1, 0);
    for (int x = 0; x < g.n(); ++x) offset[x + 1] = offset[x] + g.degree(x);
    const size_t nd = size_t(offset[g.n()]);
    size_t rows = size_t(g.n() + g.m());
    for (int w : wb) rows += size_t(g.degree(b.origin(w)));
    ZMatrix mat(a.q(), rows, nd + 1);
    std::vector<uint32_t> rhs(rows, 0);
    size_t r = 0;
    for (int x = 0; x < g.n(); ++x, ++r)
        for (int j = 0; j < g.degree(x); ++j) mat.at(r, offset[x] + j) = 1;
    for (int e = 0; e < g.m(); ++e, ++r) {
        auto [x, y] = g.edges()[e];
        mat.at(r, offset[x] + g.nbr_index(x, y)) = 1;
        mat.at(r, offset[y] + g.nbr_index(y, x)) = 1;
        if (e == edge) mat.at(r, nd) = a.mask();
        rhs[r] = (a.twist().values[e] - b.twist().values[e]) & a.mask();
    }
    for (size_t i = 0; i < wb.size(); ++i) {
        int x = b.origin(wb[i]);
        if (a.origin(wa[i]) != x) throw AuditError("alignment: paired pebbles lie in different gadgets");
        for (int j = 0; j < g.degree(x); ++j, ++r) {
            mat.at(r, offset[x] + j) = 1;
            rhs[r] = (a.coord(wa[i], j) - b.coord(wb[i], j)) & a.mask();
        }
    }
    auto sol = ZReduction(mat).solve(rhs);
    if (!sol) throw AuditError("alignment: no isomorphism carries the B pebbles onto the A pebbles");
    Alignment al;
    al.sigma = PartialMap::identity(g, a.q());
    for (int x = 0; x < g.n(); ++x) al.sigma.d[x].assign((*sol).begin() + offset[x], (*sol).begin() + offset[x + 1]);
    al.theta = (*sol)[nd] & a.mask();
    return al;
}

// least vertex of degree >= 3 beyond distance ell from the blocked origins
std::optional<int> relocation_target(const BaseGraph& g, const std::vector<int>& blocked, int ell) {
    std::vector<int> d;
    if (!blocked.empty()) d = g.distances(blocked);
    for (int x = 0; x < g.n(); ++x)
        if (g.degree(x) >= 3 && (blocked.empty() || d[x] < 0 || d[x] > ell)) return x;
    return std::nullopt;
}

}  // namespace

Proposal duplicator_round(const GameState& st) {
    if (st.over) throw ArgumentError("the game is over");
    if (int(st.picked.size()) != 2 * st.k) throw ArgumentError("Spoiler has not lifted 2k pebbles");
    const CfiStructure& a = *st.a;
    const CfiStructure& b = *st.b;
    const BaseGraph& g = a.base();
    auto wa = staying(st, st.peb_a), wb = staying(st, st.peb_b);
    std::vector<int> blocked;
    for (int w : wa) blocked.push_back(a.origin(w));
    const int ell = st.k == 1 ? 2 : bound_r(st.k + 1);
    auto t = relocation_target(g, blocked, ell);
    if (!t) throw AuditError("relocation: no vertex far enough from the pebbles");
    const int tp = g.neighbors(*t)[0];
    const int edge = g.edge_id(*t, tp);

    Alignment al = align(a, b, wa, wb, edge);
    CfiStructure bp = a.with_twist(a.twist().plus(edge, al.theta));
    if (!verify_isomorphism(al.sigma, b, bp)) throw AuditError("alignment map is not an isomorphism");

    Proposal p;
    p.free_labels = st.picked;
    auto rows = std::make_shared<const OrbitPartition>(orbit_partition(a, wa, st.k));
    BlockMatrix sp;
    nlohmann::json blur_audit;
    if (al.theta == 0) {
        sp = BlockMatrix::identity(rows, std::make_shared<const OrbitPartition>(retype(*rows, bp)));
        blur_audit = {{"status", "audited"}, {"notes", {{"twist", 0}}}};
    } else {
        BlurOptions o;
        o.rows = rows;
        auto res = build_S_kary(a, bp, wa, *t, tp, st.k, o);
        sp = std::move(res.s);
        blur_audit = res.audit.to_json();
    }

    // S(u, v) = S'(u, sigma(v))
    auto perm = vertex_permutation(b, al.sigma);
    std::vector<int> inv(perm.size());
    for (size_t v = 0; v < perm.size(); ++v) inv[perm[v]] = int(v);
    auto cols = std::make_shared<const OrbitPartition>(orbit_partition(b, wb, st.k));
    MatrixBuilder mb(rows, cols);
    const TupleSpace& space = rows->space;
    for (uint64_t r = 0; r < sp.nrows(); ++r) {
        for (uint32_t c : sp.row(r)) {
            Tuple v = space.decode(c);
            for (int& x : v) x = inv[x];
            mb.toggle(uint32_t(space.encode(v)));
        }
        mb.end_row();
    }
    p.s = mb.finish();
    p.s.audit_status = sp.audit_status;
    p.s.audit = sp.audit;
    p.a2k = std::make_shared<const OrbitPartition>(orbit_partition(a, wa, 2 * st.k));
    p.b2k = std::make_shared<const OrbitPartition>(orbit_partition(b, wb, 2 * st.k));
    p.f = type_map(*p.a2k, *p.b2k);
    for (auto x : p.f)
        if (x < 0) throw AuditError("orbit types of the two structures do not match");
    p.audit = {{"relocated_edge", {*t, tp}},
               {"twist", al.theta},
               {"blur", blur_audit},
               {"status", sp.audit_status}};
    return p;
}

nlohmann::json RefereeVerdict::to_json() const { return {{"ok", ok}, {"reason", reason}}; }

RefereeVerdict verify_round(const GameState& st, const Proposal& p) {
    RefereeVerdict v;
    const uint64_t na = uint64_t(st.a->size()), nb = uint64_t(st.b->size());
    if (!p.a2k || !p.b2k || p.a2k->k != 2 * st.k || p.b2k->k != 2 * st.k || p.a2k->space.n != na ||
        p.b2k->space.n != nb) {
        v.reason = "partitions do not cover A^k x A^k and B^k x B^k";
        return v;
    }
    if (p.a2k->num_blocks() != p.b2k->num_blocks()) {
        v.reason = "partitions differ in size";
        return v;
    }
    TupleSpace ka(na, st.k), kb(nb, st.k);
    if (p.s.nrows() != ka.size() || p.s.ncols() != kb.size()) {
        v.reason = "matrix has the wrong shape";
        return v;
    }
    try {
        auto bv = verify_blur(p.s, *p.a2k, *p.b2k, p.f, st.k);
        if (!bv.invertible) {
            v.reason = "S is not invertible";
        } else if (bv.witness) {
            auto u = ka.decode(bv.witness->u), w = kb.decode(bv.witness->v);
            nlohmann::json ju = u, jw = w;
            v.reason = "chi^P S != S chi^f(P) at block " + std::to_string(bv.witness->block) + ", row " + ju.dump() +
                       ", column " + jw.dump();
        } else {
            v.ok = true;
        }
    } catch (const ArgumentError& e) {
        v.reason = e.what();
    }
    return v;
}

bool partial_isomorphism(const GameState& st, std::string* why) {
    const CfiStructure& a = *st.a;
    const CfiStructure& b = *st.b;
    auto labels = st.placed_labels();
    auto fail = [&](int i, int j, const char* what) {
        if (why) *why = std::string(what) + " differs between pebbles " + std::to_string(i) + " and " + std::to_string(j);
        return false;
    };
    for (size_t x = 0; x < labels.size(); ++x)
        for (size_t y = x; y < labels.size(); ++y) {
            int i = labels[x], j = labels[y];
            int ai = st.peb_a[i], aj = st.peb_a[j], bi = st.peb_b[i], bj = st.peb_b[j];
            if (bi < 0 || bj < 0) return fail(i, j, "placement");
            if ((ai == aj) != (bi == bj)) return fail(i, j, "equality");
            if (a.pre(ai, aj) != b.pre(bi, bj) || a.pre(aj, ai) != b.pre(bj, bi)) return fail(i, j, "preorder");
            if (a.origin(ai) == a.origin(aj)) {
                if (b.origin(bi) != b.origin(bj)) return fail(i, j, "gadget");
                if (a.agree_key(ai, aj, 0) != b.agree_key(bi, bj, 0)) return fail(i, j, "R_I class");
                if (a.agree_key(ai, aj, 1) != b.agree_key(bi, bj, 1)) return fail(i, j, "R_C class");
            } else if (b.origin(bi) == b.origin(bj)) {
                return fail(i, j, "gadget");
            }
            if (a.edge_value(ai, aj) != b.edge_value(bi, bj)) return fail(i, j, "edge relation");
        }
    return true;
}

bool spoiler_move(GameState& st, const Proposal& p, size_t block, const Tuple& u, const Tuple& v) {
    if (st.over) throw ArgumentError("the game is over");
    if (int(u.size()) != 2 * st.k || int(v.size()) != 2 * st.k) throw ArgumentError("Spoiler places 2k pebbles");
    if (block >= p.a2k->num_blocks()) throw ArgumentError("no such block");
    for (int x : u)
        if (x < 0 || x >= st.a->size()) throw ArgumentError("tuple entry out of range");
    for (int x : v)
        if (x < 0 || x >= st.b->size()) throw ArgumentError("tuple entry out of range");
    if (p.a2k->block_of[p.a2k->space.encode(u)] != block) throw ArgumentError("u is not in the chosen block");
    if (int64_t(p.b2k->block_of[p.b2k->space.encode(v)]) != p.f[block]) throw ArgumentError("v is not in f(P)");
    for (size_t i = 0; i < p.free_labels.size(); ++i) {
        st.peb_a[p.free_labels[i]] = u[i];
        st.peb_b[p.free_labels[i]] = v[i];
    }
    st.picked.clear();
    ++st.round;
    std::string why;
    if (!partial_isomorphism(st, &why)) {
        st.over = true;
        st.winner = "spoiler";
        st.reason = why;
        return false;
    }
    return true;
}

SpoilerPolicy SpoilerPolicy::from_json(const nlohmann::json& j) {
    SpoilerPolicy p;
    std::string kind = j.value("policy", std::string("random"));
    if (kind == "random")
        p.kind = Kind::Random;
    else if (kind == "exhaustive")
        p.kind = Kind::Exhaustive;
    else if (kind == "scripted")
        p.kind = Kind::Scripted;
    else
        throw ValidationError("unknown Spoiler policy " + kind);
    p.seed = j.value("seed", uint64_t(0));
    p.depth = j.value("depth", 1);
    if (j.contains("script")) p.script = j.at("script");
    return p;
}

namespace {

using StateKey = std::vector<int>;

StateKey state_key(const GameState& st) {
    StateKey key;
    for (int l : st.placed_labels()) {
        key.push_back(l);
        key.push_back(st.peb_a[l]);
        key.push_back(st.peb_b[l]);
    }
    return key;
}

std::vector<int> all_labels_or_random(const GameState& st, std::mt19937_64& rng) {
    std::vector<int> labels(st.m);
    for (int i = 0; i < st.m; ++i) labels[i] = i;
    for (int i = st.m - 1; i > 0; --i) std::swap(labels[i], labels[rng() % uint64_t(i + 1)]);
    labels.resize(2 * st.k);
    std::sort(labels.begin(), labels.end());
    return labels;
}

std::vector<std::vector<int>> label_subsets(int m, int size) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int from) -> void {
        if (int(cur.size()) == size) {
            out.push_back(cur);
            return;
        }
        for (int i = from; i < m; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

class Duplicator {
public:
    struct Answer {
        std::shared_ptr<Proposal> proposal;
        RefereeVerdict verdict;
        std::string failure;  // strategy error
    };

    const Answer& answer(const GameState& st) {
        StateKey key = state_key(st);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Answer ans;
        try {
            ans.proposal = std::make_shared<Proposal>(duplicator_round(st));
            ans.verdict = verify_round(st, *ans.proposal);
        } catch (const AuditError& e) {
            ans.failure = e.what();
        }
        return cache_.emplace(std::move(key), std::move(ans)).first->second;
    }

private:
    std::map<StateKey, Answer> cache_;
};

nlohmann::json proposal_summary(const Proposal& p) {
    return {{"blocks", p.a2k->num_blocks()}, {"nonzeros", p.s.nnz()}, {"audit", p.audit}};
}

nlohmann::json pebbles_json(const GameState& st) {
    nlohmann::json j = nlohmann::json::array();
    for (int l : st.placed_labels()) j.push_back({{"label", l}, {"a", st.peb_a[l]}, {"b", st.peb_b[l]}});
    return j;
}

struct Exhaustive {
    Duplicator& dup;
    uint64_t moves = 0;
    uint64_t states = 0;
    std::map<StateKey, int> safe;  // post-pickup state -> depth known safe

    // a winning line for Spoiler within depth rounds, if one exists
    std::optional<nlohmann::json> search(const GameState& st, int depth) {
        auto pickups = st.m == 2 * st.k ? std::vector<std::vector<int>>{label_subsets(st.m, st.m)}
                                        : label_subsets(st.m, 2 * st.k);
        for (auto& labels : pickups) {
            GameState s2 = st;
            pick_up(s2, labels);
            StateKey key = state_key(s2);
            auto it = safe.find(key);
            if (it != safe.end() && it->second >= depth) continue;
            ++states;
            const auto& ans = dup.answer(s2);
            if (!ans.failure.empty() || !ans.verdict.ok) {
                nlohmann::json step{{"round", st.round + 1},
                                    {"pickup", labels},
                                    {"duplicator_failed", ans.failure.empty() ? ans.verdict.reason : ans.failure}};
                return nlohmann::json::array({step});
            }
            const Proposal& p = *ans.proposal;
            // one pass checking every placement, then one pass looking deeper
            for (int pass = (it != safe.end() ? 1 : 0); pass < (depth > 1 ? 2 : 1); ++pass) {
                for (size_t blk = 0; blk < p.a2k->num_blocks(); ++blk) {
                    auto qb = p.b2k->block(size_t(p.f[blk]));
                    for (uint32_t ut : p.a2k->block(blk))
                        for (uint32_t vt : qb) {
                            GameState s3 = s2;
                            Tuple u = p.a2k->space.decode(ut), v = p.b2k->space.decode(vt);
                            nlohmann::json step{
                                {"round", st.round + 1}, {"pickup", labels}, {"block", blk}, {"u", u}, {"v", v}};
                            if (pass == 0) {
                                ++moves;
                                if (!spoiler_move(s3, p, blk, u, v)) {
                                    step["reason"] = s3.reason;
                                    return nlohmann::json::array({step});
                                }
                            } else {
                                spoiler_move(s3, p, blk, u, v);
                                if (auto line = search(s3, depth - 1)) {
                                    line->insert(line->begin(), step);
                                    return line;
                                }
                            }
                        }
                }
                if (pass == 0) {
                    int& d1 = safe[key];
                    d1 = std::max(d1, 1);
                }
            }
            int& d = safe[key];
            d = std::max(d, depth);
        }
        return std::nullopt;
    }
};

}  // namespace

PlayResult play(GameState& st, const SpoilerPolicy& policy, int rounds) {
    PlayResult res;
    nlohmann::json log = nlohmann::json::array();
    res.transcript = {{"k", st.k}, {"m", st.m}, {"universe", st.a->size()}};
    if (st.over) {
        res.outcome = "spoiler-won-at-round-0";
        res.transcript["outcome"] = res.outcome;
        res.transcript["reason"] = st.reason;
        return res;
    }
    Duplicator dup;

    if (policy.kind == SpoilerPolicy::Kind::Exhaustive) {
        Exhaustive ex{dup, 0, 0, {}};
        auto line = ex.search(st, policy.depth);
        res.transcript["policy"] = {{"policy", "exhaustive"}, {"depth", policy.depth}};
        res.transcript["states_explored"] = ex.states;
        res.transcript["moves_checked"] = ex.moves;
        // with m = 2k every round starts from the same empty configuration
        res.transcript["stationary"] = st.m == 2 * st.k && st.placed_labels().empty();
        if (line) {
            res.transcript["winning_line"] = *line;
            res.rounds_played = int(line->size());
            res.outcome = "spoiler-won-at-round-" + std::to_string(line->size());
        } else {
            res.duplicator_survived = true;
            res.rounds_played = policy.depth;
            res.outcome = "duplicator-survived-" + std::to_string(policy.depth);
        }
        res.transcript["outcome"] = res.outcome;
        return res;
    }

    std::mt19937_64 rng(policy.seed);
    std::set<StateKey> seen;
    int total = rounds;
    if (policy.kind == SpoilerPolicy::Kind::Scripted) total = std::min<int>(rounds, int(policy.script.size()));
    for (int r = 0; r < total && !st.over; ++r) {
        nlohmann::json entry{{"round", st.round + 1}};
        std::vector<int> labels;
        const nlohmann::json* step = nullptr;
        if (policy.kind == SpoilerPolicy::Kind::Scripted) {
            step = &policy.script.at(size_t(r));
            if (step->contains("pickup"))
                labels = step->at("pickup").get<std::vector<int>>();
            else if (st.m == 2 * st.k)
                labels = label_subsets(st.m, st.m)[0];
            else
                throw ValidationError("scripted move needs a pickup list when m > 2k");
        } else {
            labels = all_labels_or_random(st, rng);
        }
        pick_up(st, labels);
        entry["pickup"] = labels;
        StateKey key = state_key(st);
        entry["stationary"] = !seen.insert(key).second;
        const auto& ans = dup.answer(st);
        if (!ans.failure.empty() || !ans.verdict.ok) {
            entry["duplicator_failed"] = ans.failure.empty() ? ans.verdict.reason : ans.failure;
            log.push_back(entry);
            st.over = true;
            st.winner = "spoiler";
            st.reason = entry["duplicator_failed"];
            ++st.round;
            break;
        }
        const Proposal& p = *ans.proposal;
        entry["proposal"] = proposal_summary(p);
        entry["referee"] = ans.verdict.to_json();
        size_t blk;
        Tuple u, v;
        if (step) {
            u = step->at("u").get<Tuple>();
            v = step->at("v").get<Tuple>();
            if (int(u.size()) != 2 * st.k) throw ArgumentError("scripted u has the wrong length");
            for (int x : u)
                if (x < 0 || x >= st.a->size()) throw ArgumentError("scripted u out of range");
            blk = p.a2k->block_of[p.a2k->space.encode(u)];
        } else {
            blk = size_t(rng() % p.a2k->num_blocks());
            auto pm = p.a2k->block(blk);
            auto qm = p.b2k->block(size_t(p.f[blk]));
            u = p.a2k->space.decode(pm[rng() % pm.size()]);
            v = p.b2k->space.decode(qm[rng() % qm.size()]);
        }
        entry["move"] = {{"block", blk}, {"u", u}, {"v", v}};
        bool ok = spoiler_move(st, p, blk, u, v);
        entry["partial_isomorphism"] = ok;
        if (!ok) entry["reason"] = st.reason;
        entry["pebbles"] = pebbles_json(st);
        log.push_back(entry);
    }
    res.rounds_played = st.round;
    res.duplicator_survived = !st.over;
    res.outcome = st.over ? "spoiler-won-at-round-" + std::to_string(st.round)
                          : "duplicator-survived-" + std::to_string(total);
    nlohmann::json pol{{"policy", policy.kind == SpoilerPolicy::Kind::Random ? "random" : "scripted"}};
    if (policy.kind == SpoilerPolicy::Kind::Random) pol["seed"] = policy.seed;
    res.transcript["policy"] = pol;
    res.transcript["rounds"] = log;
    res.transcript["outcome"] = res.outcome;
    return res;
}

}  // namespace cfikit
