#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/error.hpp"

namespace cfikit {

using Edge = std::pair<int, int>;  // always first < second

// Simple connected graph on 0..n-1; the vertex order is the integer order.
class BaseGraph {
public:
    BaseGraph() = default;
    BaseGraph(int n, std::vector<Edge> edges);

    int n() const { return n_; }
    int m() const { return int(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int x) const { return adj_[x]; }
    int degree(int x) const { return int(adj_[x].size()); }

    // edge id of {u,v}, -1 if not adjacent
    int edge_id(int u, int v) const;
    // position of y in neighbors(x), -1 if not adjacent
    int nbr_index(int x, int y) const;
    bool adjacent(int u, int v) const { return nbr_index(u, v) >= 0; }
    // edge id of the edge from x to its j-th neighbor
    int incident_edge(int x, int j) const { return inc_[x][j]; }

    std::vector<int> distances(const std::vector<int>& sources) const;
    std::vector<int> distances(int source) const { return distances(std::vector<int>{source}); }
    int distance(int u, int v) const { return distances(u)[v]; }

    bool operator==(const BaseGraph& o) const { return n_ == o.n_ && edges_ == o.edges_; }

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
    std::vector<std::vector<int>> inc_;
};

constexpr int kInfinite = -1;

struct GraphReport {
    std::vector<int> degrees;
    bool is_regular = false;
    int degree = 0;        // meaningful when regular
    int girth = kInfinite; // kInfinite for forests
    int connectivity = 0;

    nlohmann::json to_json() const;
};

int girth(const BaseGraph& g);
int vertex_connectivity(const BaseGraph& g);
GraphReport properties(const BaseGraph& g);

// named graphs
BaseGraph complete_graph(int n);
BaseGraph hypercube(int dim);
BaseGraph petersen();
BaseGraph heawood();
BaseGraph mcgee();
BaseGraph tutte_coxeter();
BaseGraph prism(int n);
BaseGraph circulant(int n, const std::vector<int>& jumps);
BaseGraph lcf_graph(int n, const std::vector<int>& pattern);

// "K4", "Q4", "petersen", "prism3", "C8_1_3" and so on
BaseGraph named_graph(const std::string& name);
std::vector<std::string> catalog_names();

struct GenerationFailed : NotFoundError {
    std::optional<BaseGraph> best;
    GenerationFailed(const std::string& what, std::optional<BaseGraph> b)
        : NotFoundError(what), best(std::move(b)) {}
};

// First catalog graph that is degree-regular with the requested girth and
// connectivity lower bounds, otherwise a random regular graph.
BaseGraph catalog_or_generate(int degree, int min_girth, int min_connectivity,
                              std::optional<uint64_t> seed, int attempts = 2000);

// Least vertex at distance > ell from every blocked vertex.
std::optional<int> distant_vertex(const BaseGraph& g, const std::vector<int>& blocked, int ell);

std::string to_text(const BaseGraph& g);
BaseGraph graph_from_text(const std::string& text);
nlohmann::json to_json(const BaseGraph& g);
BaseGraph graph_from_json(const nlohmann::json& j);

// catalog name or a file in text or JSON form
BaseGraph load_graph(const std::string& name_or_path);

}  // namespace cfikit
