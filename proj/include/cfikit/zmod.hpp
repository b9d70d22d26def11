#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace cfikit {

// Element of Z_{2^q}.  Arithmetic between different moduli throws.
struct RingValue {
    int q = 1;
    uint32_t v = 0;

    RingValue() = default;
    RingValue(int q_, int64_t value);

    uint32_t modulus() const { return uint32_t(1) << q; }
    RingValue operator+(const RingValue& o) const;
    RingValue operator-(const RingValue& o) const;
    RingValue operator*(const RingValue& o) const;
    RingValue operator-() const;
    bool operator==(const RingValue& o) const { return q == o.q && v == o.v; }
    bool operator!=(const RingValue& o) const { return !(*this == o); }
};

inline uint32_t mod_mask(int q) { return (uint32_t(1) << q) - 1; }

// 2-adic valuation of x in Z_{2^q}; returns q for zero.
int valuation(uint32_t x, int q);

// inverse of an odd element modulo 2^q
uint32_t inverse_odd(uint32_t x, int q);

// Dense matrix over Z_{2^q}, row-major.
struct ZMatrix {
    int q = 1;
    size_t rows = 0, cols = 0;
    std::vector<uint32_t> a;

    ZMatrix() = default;
    ZMatrix(int q_, size_t r, size_t c) : q(q_), rows(r), cols(c), a(r * c, 0) {}
    uint32_t& at(size_t i, size_t j) { return a[i * cols + j]; }
    uint32_t at(size_t i, size_t j) const { return a[i * cols + j]; }
};

// Diagonal reduction U·M·V = D with D diagonal entries 2^{v_i}.  Rows of U
// and columns of V are tracked so that both solving and kernel extraction
// are exact over the non-field ring.
class ZReduction {
public:
    explicit ZReduction(const ZMatrix& m);

    // some x with M x = b, or nothing
    std::optional<std::vector<uint32_t>> solve(const std::vector<uint32_t>& b) const;

    // generators of {x : M x = 0}
    std::vector<std::vector<uint32_t>> kernel() const;

    size_t pivots() const { return piv_val_.size(); }

private:
    int q_;
    size_t rows_, cols_;
    ZMatrix u_;  // rows x rows
    ZMatrix v_;  // cols x cols
    std::vector<int> piv_val_;  // valuation of the i-th diagonal entry
};

}  // namespace cfikit
