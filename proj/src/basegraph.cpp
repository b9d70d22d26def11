#include "cfikit/basegraph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace cfikit {

BaseGraph::BaseGraph(int n, std::vector<Edge> edges) : n_(n) {
    if (n < 1) throw ValidationError("graph needs at least one vertex");
    for (auto& e : edges) {
        if (e.first == e.second) throw ValidationError("self-loop at vertex " + std::to_string(e.first));
        if (e.first > e.second) std::swap(e.first, e.second);
        if (e.first < 0 || e.second >= n) throw ValidationError("edge endpoint out of range");
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw ValidationError("parallel edges");
    edges_ = std::move(edges);
    adj_.assign(n, {});
    for (auto& [u, v] : edges_) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
    inc_.assign(n, {});
    for (int x = 0; x < n; ++x)
        for (int y : adj_[x]) inc_[x].push_back(edge_id(x, y));
    auto d = distances(0);
    for (int x = 0; x < n; ++x)
        if (d[x] < 0) throw ValidationError("graph is disconnected");
}

int BaseGraph::edge_id(int u, int v) const {
    if (u > v) std::swap(u, v);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v});
    if (it == edges_.end() || *it != Edge{u, v}) return -1;
    return int(it - edges_.begin());
}

int BaseGraph::nbr_index(int x, int y) const {
    const auto& a = adj_[x];
    auto it = std::lower_bound(a.begin(), a.end(), y);
    if (it == a.end() || *it != y) return -1;
    return int(it - a.begin());
}

std::vector<int> BaseGraph::distances(const std::vector<int>& sources) const {
    std::vector<int> d(n_, -1);
    std::deque<int> queue;
    for (int s : sources) {
        if (s < 0 || s >= n_) throw ArgumentError("vertex out of range");
        if (d[s] < 0) {
            d[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int y : adj_[x])
            if (d[y] < 0) {
                d[y] = d[x] + 1;
                queue.push_back(y);
            }
    }
    return d;
}

nlohmann::json GraphReport::to_json() const {
    return {{"degrees", degrees},
            {"is_regular", is_regular},
            {"degree", degree},
            {"girth", girth == kInfinite ? nlohmann::json("infinity") : nlohmann::json(girth)},
            {"connectivity", connectivity}};
}

int girth(const BaseGraph& g) {
    int best = std::numeric_limits<int>::max();
    std::vector<int> dist(g.n()), parent(g.n());
    for (int r = 0; r < g.n(); ++r) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[r] = 0;
        parent[r] = -1;
        std::deque<int> queue{r};
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            if (2 * dist[x] + 1 >= best) break;
            for (int y : g.neighbors(x)) {
                if (dist[y] < 0) {
                    dist[y] = dist[x] + 1;
                    parent[y] = x;
                    queue.push_back(y);
                } else if (parent[x] != y) {
                    best = std::min(best, dist[x] + dist[y] + 1);
                }
            }
        }
    }
    return best == std::numeric_limits<int>::max() ? kInfinite : best;
}

namespace {

// Unit vertex capacities via the usual in/out split.
class VertexFlow {
public:
    explicit VertexFlow(const BaseGraph& g) : g_(g) {}

    // number of internally vertex-disjoint s-t paths, stopping at limit
    int disjoint_paths(int s, int t, int limit) {
        int nn = 2 * g_.n();
        head_.assign(nn, -1);
        to_.clear();
        cap_.clear();
        next_.clear();
        const int big = g_.n();
        for (int v = 0; v < g_.n(); ++v) add(2 * v, 2 * v + 1, (v == s || v == t) ? big : 1);
        for (auto& [u, v] : g_.edges()) {
            add(2 * u + 1, 2 * v, big);
            add(2 * v + 1, 2 * u, big);
        }
        int src = 2 * s + 1, snk = 2 * t;
        int flow = 0;
        std::vector<int> pred(nn);
        while (flow < limit) {
            std::fill(pred.begin(), pred.end(), -2);
            pred[src] = -1;
            std::deque<int> queue{src};
            while (!queue.empty() && pred[snk] == -2) {
                int x = queue.front();
                queue.pop_front();
                for (int a = head_[x]; a >= 0; a = next_[a])
                    if (cap_[a] > 0 && pred[to_[a]] == -2) {
                        pred[to_[a]] = a;
                        queue.push_back(to_[a]);
                    }
            }
            if (pred[snk] == -2) break;
            for (int x = snk; x != src;) {
                int a = pred[x];
                cap_[a] -= 1;
                cap_[a ^ 1] += 1;
                x = to_[a ^ 1];
            }
            ++flow;
        }
        return flow;
    }

private:
    void add(int u, int v, int c) {
        to_.push_back(v);
        cap_.push_back(c);
        next_.push_back(head_[u]);
        head_[u] = int(to_.size()) - 1;
        to_.push_back(u);
        cap_.push_back(0);
        next_.push_back(head_[v]);
        head_[v] = int(to_.size()) - 1;
    }

    const BaseGraph& g_;
    std::vector<int> head_, to_, cap_, next_;
};

}  // namespace

int vertex_connectivity(const BaseGraph& g) {
    int n = g.n();
    int best = n - 1;
    for (int x = 0; x < n; ++x) best = std::min(best, g.degree(x));
    VertexFlow flow(g);
    // some vertex among the first best+1 lies outside a minimum separator
    for (int i = 0; i < n && i <= best; ++i)
        for (int j = 0; j < n; ++j) {
            if (j == i || g.adjacent(i, j)) continue;
            best = std::min(best, flow.disjoint_paths(i, j, best));
        }
    return best;
}

GraphReport properties(const BaseGraph& g) {
    GraphReport r;
    for (int x = 0; x < g.n(); ++x) r.degrees.push_back(g.degree(x));
    r.is_regular = std::all_of(r.degrees.begin(), r.degrees.end(),
                               [&](int d) { return d == r.degrees[0]; });
    r.degree = r.is_regular ? r.degrees[0] : 0;
    r.girth = girth(g);
    r.connectivity = vertex_connectivity(g);
    return r;
}

BaseGraph complete_graph(int n) {
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return BaseGraph(n, e);
}

BaseGraph hypercube(int dim) {
    int n = 1 << dim;
    std::vector<Edge> e;
    for (int v = 0; v < n; ++v)
        for (int b = 0; b < dim; ++b)
            if (!(v >> b & 1)) e.emplace_back(v, v | 1 << b);
    return BaseGraph(n, e);
}

BaseGraph petersen() {
    std::vector<Edge> e;
    for (int i = 0; i < 5; ++i) {
        e.emplace_back(i, (i + 1) % 5);
        e.emplace_back(i, i + 5);
        e.emplace_back(5 + i, 5 + (i + 2) % 5);
    }
    return BaseGraph(10, e);
}

BaseGraph lcf_graph(int n, const std::vector<int>& pattern) {
    std::set<Edge> e;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        e.insert({std::min(i, j), std::max(i, j)});
        int k = ((i + pattern[i % pattern.size()]) % n + n) % n;
        e.insert({std::min(i, k), std::max(i, k)});
    }
    return BaseGraph(n, std::vector<Edge>(e.begin(), e.end()));
}

BaseGraph heawood() { return lcf_graph(14, {5, -5}); }
BaseGraph mcgee() { return lcf_graph(24, {12, 7, -7}); }
BaseGraph tutte_coxeter() { return lcf_graph(30, {-13, -9, 7, -7, 9, 13}); }

BaseGraph prism(int n) {
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i) {
        e.emplace_back(i, (i + 1) % n);
        e.emplace_back(n + i, n + (i + 1) % n);
        e.emplace_back(i, n + i);
    }
    return BaseGraph(2 * n, e);
}

BaseGraph circulant(int n, const std::vector<int>& jumps) {
    std::set<Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j : jumps) {
            int k = ((i + j) % n + n) % n;
            if (k == i) throw ValidationError("circulant jump is a multiple of n");
            e.insert({std::min(i, k), std::max(i, k)});
        }
    return BaseGraph(n, std::vector<Edge>(e.begin(), e.end()));
}

BaseGraph named_graph(const std::string& name) {
    std::smatch m;
    if (std::regex_match(name, m, std::regex("K(\\d+)"))) return complete_graph(std::stoi(m[1]));
    if (std::regex_match(name, m, std::regex("Q(\\d+)"))) return hypercube(std::stoi(m[1]));
    if (std::regex_match(name, m, std::regex("prism(\\d+)"))) return prism(std::stoi(m[1]));
    if (std::regex_match(name, m, std::regex("C(\\d+)((_\\d+)+)"))) {
        std::vector<int> jumps;
        std::string rest = m[2];
        std::regex num("\\d+");
        for (auto it = std::sregex_iterator(rest.begin(), rest.end(), num); it != std::sregex_iterator(); ++it)
            jumps.push_back(std::stoi(it->str()));
        return circulant(std::stoi(m[1]), jumps);
    }
    if (name == "petersen") return petersen();
    if (name == "heawood") return heawood();
    if (name == "mcgee") return mcgee();
    if (name == "tutte_coxeter") return tutte_coxeter();
    throw NotFoundError("unknown graph name: " + name);
}

std::vector<std::string> catalog_names() {
    return {"K4", "K5", "K6", "K7", "K8", "Q3", "Q4", "Q5", "petersen", "heawood", "mcgee", "tutte_coxeter"};
}

namespace {

bool meets(const BaseGraph& g, int degree, int min_girth, int min_conn) {
    for (int x = 0; x < g.n(); ++x)
        if (g.degree(x) != degree) return false;
    int gi = girth(g);
    if (gi != kInfinite && gi < min_girth) return false;
    return vertex_connectivity(g) >= min_conn;
}

std::vector<std::vector<int>> jump_sets(int n, int degree) {
    std::vector<std::vector<int>> out;
    int half = n / 2;
    for (uint32_t mask = 1; mask < (1u << half); ++mask) {
        std::vector<int> j;
        int deg = 0;
        for (int b = 0; b < half; ++b)
            if (mask >> b & 1) {
                j.push_back(b + 1);
                deg += (n % 2 == 0 && b + 1 == half) ? 1 : 2;
            }
        if (deg == degree) out.push_back(j);
    }
    return out;
}

}  // namespace

BaseGraph catalog_or_generate(int degree, int min_girth, int min_conn, std::optional<uint64_t> seed,
                              int attempts) {
    if (degree < 3) throw ArgumentError("degree must be at least 3");
    std::vector<BaseGraph> candidates;
    candidates.push_back(complete_graph(degree + 1));
    if (degree <= 10) candidates.push_back(hypercube(degree));
    for (auto& g : {petersen(), heawood(), mcgee(), tutte_coxeter()}) candidates.push_back(g);
    for (auto& g : candidates)
        if (meets(g, degree, min_girth, min_conn)) return g;
    for (int n = degree + 1; n <= 32; ++n)
        for (auto& j : jump_sets(n, degree)) {
            BaseGraph g;
            try {
                g = circulant(n, j);
            } catch (const ValidationError&) {
                continue;  // disconnected
            }
            if (meets(g, degree, min_girth, min_conn)) return g;
        }

    if (!seed) throw GenerationFailed("no catalog graph meets the bounds and no seed was given", std::nullopt);
    std::mt19937_64 rng(*seed);
    std::optional<BaseGraph> best;
    int best_girth = -1;
    int n = std::max(degree + 2, 2 * min_girth);
    if ((n * degree) % 2) ++n;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && attempt % 200 == 0) n += 2;
        std::vector<int> points;
        for (int v = 0; v < n; ++v)
            for (int i = 0; i < degree; ++i) points.push_back(v);
        std::shuffle(points.begin(), points.end(), rng);
        std::set<Edge> e;
        bool ok = true;
        for (size_t i = 0; i < points.size() && ok; i += 2) {
            int u = points[i], v = points[i + 1];
            if (u == v || !e.insert({std::min(u, v), std::max(u, v)}).second) ok = false;
        }
        if (!ok) continue;
        BaseGraph g;
        try {
            g = BaseGraph(n, std::vector<Edge>(e.begin(), e.end()));
        } catch (const ValidationError&) {
            continue;
        }
        int gi = girth(g);
        if (gi > best_girth) {
            best_girth = gi;
            best = g;
        }
        if (gi < min_girth) continue;
        if (vertex_connectivity(g) >= min_conn) return g;
    }
    throw GenerationFailed("generation budget exhausted", best);
}

std::optional<int> distant_vertex(const BaseGraph& g, const std::vector<int>& blocked, int ell) {
    if (blocked.empty()) return g.n() > 0 ? std::optional<int>(0) : std::nullopt;
    auto d = g.distances(blocked);
    for (int x = 0; x < g.n(); ++x)
        if (d[x] > ell) return x;
    return std::nullopt;
}

std::string to_text(const BaseGraph& g) {
    std::ostringstream out;
    out << g.n() << ' ' << g.m() << '\n';
    for (auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
    return out.str();
}

BaseGraph graph_from_text(const std::string& text) {
    std::istringstream in(text);
    long n, m;
    if (!(in >> n >> m) || n < 1 || m < 0) throw DecodeError("graph text: bad header");
    std::vector<Edge> e;
    for (long i = 0; i < m; ++i) {
        long u, v;
        if (!(in >> u >> v)) throw DecodeError("graph text: truncated edge list");
        if (u >= v) throw DecodeError("graph text: edge must be written u < v");
        e.emplace_back(int(u), int(v));
    }
    std::string extra;
    if (in >> extra) throw DecodeError("graph text: trailing data");
    try {
        return BaseGraph(int(n), e);
    } catch (const ValidationError& err) {
        throw DecodeError(std::string("graph text: ") + err.what());
    }
}

nlohmann::json to_json(const BaseGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto& [u, v] : g.edges()) edges.push_back({u, v});
    return {{"format", "graph"}, {"n", g.n()}, {"m", g.m()}, {"edges", edges}};
}

BaseGraph graph_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "graph") throw DecodeError("not a graph document");
        int n = j.at("n").get<int>();
        std::vector<Edge> e;
        for (auto& p : j.at("edges")) {
            if (p.size() != 2) throw DecodeError("graph json: edge must have two endpoints");
            e.emplace_back(p[0].get<int>(), p[1].get<int>());
        }
        if (j.at("m").get<size_t>() != e.size()) throw DecodeError("graph json: edge count mismatch");
        for (auto& [u, v] : e)
            if (u >= v) throw DecodeError("graph json: edge must be written u < v");
        return BaseGraph(n, e);
    } catch (const nlohmann::json::exception& err) {
        throw DecodeError(std::string("graph json: ") + err.what());
    } catch (const ValidationError& err) {
        throw DecodeError(std::string("graph json: ") + err.what());
    }
}

BaseGraph load_graph(const std::string& name_or_path) {
    try {
        return named_graph(name_or_path);
    } catch (const NotFoundError&) {
    }
    std::ifstream in(name_or_path);
    if (!in) throw DecodeError("cannot open graph file: " + name_or_path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string s = buf.str();
    auto first = s.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && s[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(s);
        } catch (const nlohmann::json::exception& err) {
            throw DecodeError(std::string("graph json: ") + err.what());
        }
        return graph_from_json(j);
    }
    return graph_from_text(s);
}

}  // namespace cfikit
