#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/cfi.hpp"

namespace cfikit {

using Tuple = std::vector<int>;

// Generators of the circulations vanishing at the blocked vertices.  A
// generator stores value(u->v) for every edge {u,v}, u < v.
struct CirculationBasis {
    int q = 1;
    std::vector<std::vector<uint32_t>> gens;
    std::vector<int> blocked;
};

CirculationBasis aut_generators(const CfiStructure& s, const std::vector<int>& pebbles);

// translation family of a circulation: d_x(y) = value(x->y)
PartialMap circulation_map(const BaseGraph& g, int q, const std::vector<uint32_t>& circ);
std::vector<int> vertex_permutation(const CfiStructure& s, const PartialMap& m);

// Row-major mixed-radix indexing of k-tuples over an n-element universe.
struct TupleSpace {
    uint64_t n = 0;
    int k = 0;

    TupleSpace() = default;
    TupleSpace(uint64_t n_, int k_) : n(n_), k(k_) {}
    uint64_t size() const;
    uint64_t encode(const Tuple& u) const;
    Tuple decode(uint64_t t) const;
    int entry(uint64_t t, int i) const;
};

// Orig tuple plus pairwise relative data of the pebbles followed by u.
struct TypeDescriptor {
    std::vector<int64_t> code;
    bool operator==(const TypeDescriptor& o) const { return code == o.code; }
    bool operator<(const TypeDescriptor& o) const { return code < o.code; }
};

TypeDescriptor tuple_type(const CfiStructure& s, const std::vector<int>& pebbles, const Tuple& u);

struct OrbitPartition {
    int k = 0;
    TupleSpace space;
    std::vector<int> pebbles;
    std::vector<uint32_t> block_of;  // per tuple index
    std::vector<uint32_t> members;   // blocks concatenated, each sorted
    std::vector<uint64_t> offsets;   // num_blocks + 1
    std::vector<TypeDescriptor> types;

    size_t num_blocks() const { return types.size(); }
    std::span<const uint32_t> block(size_t b) const {
        return {members.data() + offsets[b], members.data() + offsets[b + 1]};
    }
    size_t block_size(size_t b) const { return offsets[b + 1] - offsets[b]; }
};

constexpr uint64_t kDefaultTupleLimit = uint64_t(1) << 24;

OrbitPartition orbit_partition(const CfiStructure& s, const std::vector<int>& pebbles, int k,
                               uint64_t max_tuples = kDefaultTupleLimit);
// same blocks with descriptors taken in another structure on the same base
OrbitPartition retype(const OrbitPartition& p, const CfiStructure& other);

// circulation mapping u to v while fixing the pebbles, if one exists
std::optional<std::vector<uint32_t>> orbit_witness(const CfiStructure& s, const std::vector<int>& pebbles,
                                                   const Tuple& u, const Tuple& v);
bool same_orbit(const CfiStructure& s, const std::vector<int>& pebbles, const Tuple& u, const Tuple& v);

// residual tuples of block b after fixing the entries at positions K to w
std::vector<uint32_t> fix_vertex_orbit(const OrbitPartition& p, size_t b, const std::vector<int>& positions,
                                       const std::vector<int>& values);

// groups of tuple positions forming the components of G[orig(u)]
std::vector<std::vector<int>> tuple_components(const BaseGraph& g, const std::vector<int>& origins);

struct ComponentSplit {
    std::vector<int> pos_m, pos_n;
    std::vector<uint32_t> left, right;  // tuple indices over |pos_m| and |pos_n| entries
};

ComponentSplit component_split(const CfiStructure& s, const OrbitPartition& p, size_t b,
                               const std::vector<int>& m_vertices);
std::vector<uint32_t> recombine(const ComponentSplit& split, uint64_t n);

nlohmann::json to_json(const OrbitPartition& p);

}  // namespace cfikit
