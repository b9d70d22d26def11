#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/blurer.hpp"
#include "cfikit/gf2.hpp"

namespace cfikit {

// Paths s_i = (z, ..., e_i, e_i') sharing only z; s_1 ends in the twisted edge.
struct StarLayout {
    int z = 0;
    std::vector<std::vector<int>> paths;

    int e(size_t i) const { return paths[i][paths[i].size() - 2]; }
    int ep(size_t i) const { return paths[i].back(); }
    void validate(const BaseGraph& g) const;
    nlohmann::json to_json() const;
    static StarLayout from_json(const nlohmann::json& j);
};

// deterministic layout around the edge {t,t'} for arity k
StarLayout select_layout(const BaseGraph& g, int t, int tp, int k);

enum class ComponentKind { Tip, Star, StarCenter, Sky };

struct ComponentClass {
    ComponentKind kind;
    int index = -1;  // path index for tips and single-path star components
    std::string label() const;
};

ComponentClass classify_component(const BaseGraph& g, const StarLayout& layout, const std::vector<int>& c);

// tau_a and psi_xi for one layout, with the per-vector isomorphisms cached
class StarMaps {
public:
    StarMaps(const CfiStructure& s, StarLayout layout);

    const StarLayout& layout() const { return layout_; }
    // path isomorphism by a_i on i-tip components
    Tuple tau(const Vec& a, const Tuple& u, bool inverse = false);
    // star isomorphism by xi on star components
    Tuple psi(const Vec& xi, const Tuple& u);

private:
    std::vector<std::pair<std::vector<int>, ComponentClass>> components(const Tuple& u) const;
    const PartialMap& tip_map(size_t i, uint32_t a);
    const PartialMap& star_map(const Vec& xi);

    const CfiStructure& s_;
    StarLayout layout_;
    std::map<std::pair<size_t, uint32_t>, PartialMap> tip_cache_;
    std::map<Vec, PartialMap> star_cache_;
};

Tuple tau_map(const CfiStructure& s, const StarLayout& layout, const Vec& a, const Tuple& u);
Tuple psi_xi(const CfiStructure& s, const StarLayout& layout, const Vec& xi, const Tuple& u);

struct HypothesisCheck {
    std::string name;
    std::string required;
    std::string actual;
    bool passed;
};

struct Audit {
    std::vector<HypothesisCheck> checks;
    nlohmann::json notes = nlohmann::json::object();

    void add(std::string name, bool passed, std::string required, std::string actual);
    bool audited() const;
    std::vector<std::string> failed() const;
    nlohmann::json to_json() const;
};

struct BlurOptions {
    bool allow_unaudited = false;  // keep going when hypotheses fail
    std::optional<Blurer> blurer;
    std::optional<StarLayout> layout;
    // precomputed k-orbits of (A, pebbles); computed when absent
    std::shared_ptr<const OrbitPartition> rows;
};

struct BlurResult {
    BlockMatrix s;
    Audit audit;
    Blurer blurer;
    size_t factors = 0;  // non-identity factors of a product construction
};

// The edge where two twist functions differ and by how much (b minus a).
std::pair<int, uint32_t> twist_difference(const CfiStructure& a, const CfiStructure& b);

BlurResult build_S_1ary(const CfiStructure& a, const CfiStructure& b, const std::vector<int>& pebbles, int t,
                        int tp, const BlurOptions& opts = {});

// product of per-tip blurs for the twist a + fix - xi, over (k-1)-tuples
BlurResult build_S_xi(const CfiStructure& a, const std::vector<int>& pebbles_with_pz, const Vec& xi, const Vec& fix,
                      const StarLayout& layout, int k, const BlurOptions& opts = {});

BlurResult build_S_kary(const CfiStructure& a, const CfiStructure& b, const std::vector<int>& pebbles, int t, int tp,
                        int k, const BlurOptions& opts = {});

// A(S) is contained in the claimed vertex set
bool active_region_check(const BlockMatrix& s, const CfiStructure& a, const std::vector<int>& claimed,
                         std::string* why = nullptr);

}  // namespace cfikit
