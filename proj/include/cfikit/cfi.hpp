#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/basegraph.hpp"
#include "cfikit/zmod.hpp"

namespace cfikit {

struct TwistFunction {
    int q = 1;
    std::vector<uint32_t> values;  // indexed by edge id

    static TwistFunction zero(const BaseGraph& g, int q);
    RingValue at(int edge) const { return RingValue(q, values.at(edge)); }
    TwistFunction plus(int edge, int64_t c) const;
    TwistFunction plus(const TwistFunction& o) const;
    bool operator==(const TwistFunction& o) const { return q == o.q && values == o.values; }
};

RingValue total_twist(const TwistFunction& g);

struct GadgetVertex {
    int origin;
    std::vector<uint32_t> a;  // indexed like neighbors(origin)
};

// Translation family; an empty vector at x means identity there.
struct PartialMap {
    int q = 1;
    std::vector<std::vector<uint32_t>> d;

    static PartialMap identity(const BaseGraph& g, int q);
    PartialMap then(const PartialMap& o) const;  // pointwise sum
    PartialMap inverse() const;
    bool is_identity() const;
};

PartialMap path_isomorphism(const BaseGraph& g, RingValue c, const std::vector<int>& path);
// every path runs from its tip to the common centre z
PartialMap star_isomorphism(const BaseGraph& g, const std::vector<RingValue>& c,
                            const std::vector<std::vector<int>>& paths);

class CfiStructure {
public:
    CfiStructure(const BaseGraph& g, int q, TwistFunction twist);
    CfiStructure(std::shared_ptr<const BaseGraph> g, int q, TwistFunction twist);
    // same base and q, another twist
    CfiStructure with_twist(TwistFunction twist) const;

    const BaseGraph& base() const { return *base_; }
    std::shared_ptr<const BaseGraph> base_ptr() const { return base_; }
    int q() const { return q_; }
    uint32_t mask() const { return mask_; }
    const TwistFunction& twist() const { return twist_; }

    int size() const { return int(origin_.size()); }
    int origin(int v) const { return origin_[v]; }
    int gadget_begin(int x) const { return begin_[x]; }
    int gadget_size(int x) const { return begin_[x + 1] - begin_[x]; }
    const uint16_t* coords(int v) const { return &coords_[size_t(v) * stride_]; }
    uint32_t coord(int v, int j) const { return coords_[size_t(v) * stride_ + j]; }
    // a(y) for the neighbour y of orig(v)
    uint32_t coord_toward(int v, int y) const;
    GadgetVertex vertex(int v) const;

    // index of the gadget vertex with the given full value vector
    int encode(int x, const std::vector<uint32_t>& a) const;
    int translate(int v, const std::vector<uint32_t>& d) const;
    int apply(const PartialMap& m, int v) const;

    bool pre(int a, int b) const { return origin_[a] <= origin_[b]; }
    // c with {a,b} in R_{E,c}, if the origins are adjacent
    std::optional<uint32_t> edge_value(int a, int b) const;
    // sorted (x,y) with a(y)+shift = b(y); shift 0 gives the R_I key, 1 the R_C key
    std::vector<Edge> agree_key(int a, int b, uint32_t shift) const;

private:
    std::shared_ptr<const BaseGraph> base_;
    int q_;
    uint32_t mask_;
    TwistFunction twist_;
    int stride_ = 0;
    std::vector<int> begin_;
    std::vector<int> origin_;
    std::vector<uint16_t> coords_;
};

bool verify_isomorphism(const PartialMap& m, const CfiStructure& a, const CfiStructure& b);

// A CFI structure given only by its relations.
struct RelationalCfi {
    int q = 1;
    int size = 0;
    std::vector<std::pair<int, int>> pre;
    std::vector<std::vector<std::pair<int, int>>> re;  // re[c], unordered pairs with first < second
};

RelationalCfi strip(const CfiStructure& s);
RingValue cfi_query_solve(const RelationalCfi& s);

// JSON exchange; the stripped form omits the twist function
nlohmann::json to_json(const CfiStructure& s, bool stripped = false);
CfiStructure cfi_from_json(const nlohmann::json& j);
RelationalCfi relational_from_json(const nlohmann::json& j);

// a spanning-tree composition of path isomorphisms mapping CFI(f) to CFI(g)
std::optional<PartialMap> find_isomorphism(const BaseGraph& g, const TwistFunction& f, const TwistFunction& h);

}  // namespace cfikit
