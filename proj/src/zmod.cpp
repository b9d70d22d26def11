#include "cfikit/zmod.hpp"

#include <utility>

#include "cfikit/error.hpp"

namespace cfikit {

RingValue::RingValue(int q_, int64_t value) : q(q_) {
    if (q_ < 1 || q_ > 16) throw ArgumentError("ring exponent out of range");
    int64_t m = int64_t(1) << q_;
    int64_t r = value % m;
    if (r < 0) r += m;
    v = uint32_t(r);
}

static void same_q(const RingValue& a, const RingValue& b) {
    if (a.q != b.q) throw ArgumentError("mixed-modulus ring arithmetic");
}

RingValue RingValue::operator+(const RingValue& o) const {
    same_q(*this, o);
    return RingValue(q, int64_t(v) + o.v);
}
RingValue RingValue::operator-(const RingValue& o) const {
    same_q(*this, o);
    return RingValue(q, int64_t(v) - o.v);
}
RingValue RingValue::operator*(const RingValue& o) const {
    same_q(*this, o);
    return RingValue(q, int64_t(v) * o.v);
}
RingValue RingValue::operator-() const { return RingValue(q, -int64_t(v)); }

int valuation(uint32_t x, int q) {
    x &= mod_mask(q);
    if (x == 0) return q;
    return __builtin_ctz(x);
}

uint32_t inverse_odd(uint32_t x, int q) {
    if ((x & 1) == 0) throw ArgumentError("inverse of an even element");
    // Newton iteration, each step doubles the number of correct bits
    uint32_t y = x;
    for (int i = 0; i < 5; ++i) y *= 2 - x * y;
    return y & mod_mask(q);
}

ZReduction::ZReduction(const ZMatrix& m)
    : q_(m.q), rows_(m.rows), cols_(m.cols), u_(m.q, m.rows, m.rows), v_(m.q, m.cols, m.cols) {
    const uint32_t mask = mod_mask(q_);
    ZMatrix d = m;
    for (size_t i = 0; i < rows_; ++i) u_.at(i, i) = 1;
    for (size_t j = 0; j < cols_; ++j) v_.at(j, j) = 1;

    auto swap_rows = [&](ZMatrix& x, size_t r1, size_t r2) {
        if (r1 == r2) return;
        for (size_t j = 0; j < x.cols; ++j) std::swap(x.at(r1, j), x.at(r2, j));
    };
    auto swap_cols = [&](ZMatrix& x, size_t c1, size_t c2) {
        if (c1 == c2) return;
        for (size_t i = 0; i < x.rows; ++i) std::swap(x.at(i, c1), x.at(i, c2));
    };

    size_t p = 0;
    while (p < rows_ && p < cols_) {
        int best = q_;
        size_t bi = 0, bj = 0;
        for (size_t i = p; i < rows_ && best > 0; ++i)
            for (size_t j = p; j < cols_; ++j) {
                int val = valuation(d.at(i, j), q_);
                if (val < best) {
                    best = val;
                    bi = i;
                    bj = j;
                    if (val == 0) break;
                }
            }
        if (best == q_) break;
        swap_rows(d, p, bi);
        swap_rows(u_, p, bi);
        swap_cols(d, p, bj);
        swap_cols(v_, p, bj);

        // normalize the pivot to exactly 2^best
        uint32_t unit = d.at(p, p) >> best;
        uint32_t inv = inverse_odd(unit, q_);
        for (size_t j = 0; j < cols_; ++j) d.at(p, j) = (d.at(p, j) * inv) & mask;
        for (size_t j = 0; j < rows_; ++j) u_.at(p, j) = (u_.at(p, j) * inv) & mask;

        // the pivot has minimal valuation, so every entry in its row and
        // column is a multiple of it
        for (size_t i = 0; i < rows_; ++i) {
            if (i == p) continue;
            uint32_t e = d.at(i, p);
            if (!e) continue;
            uint32_t f = e >> best;
            for (size_t j = 0; j < cols_; ++j) d.at(i, j) = (d.at(i, j) - f * d.at(p, j)) & mask;
            for (size_t j = 0; j < rows_; ++j) u_.at(i, j) = (u_.at(i, j) - f * u_.at(p, j)) & mask;
        }
        for (size_t j = 0; j < cols_; ++j) {
            if (j == p) continue;
            uint32_t e = d.at(p, j);
            if (!e) continue;
            uint32_t f = e >> best;
            for (size_t i = 0; i < rows_; ++i) d.at(i, j) = (d.at(i, j) - f * d.at(i, p)) & mask;
            for (size_t i = 0; i < cols_; ++i) v_.at(i, j) = (v_.at(i, j) - f * v_.at(i, p)) & mask;
        }
        piv_val_.push_back(best);
        ++p;
    }
}

std::optional<std::vector<uint32_t>> ZReduction::solve(const std::vector<uint32_t>& b) const {
    if (b.size() != rows_) throw ArgumentError("right-hand side has wrong length");
    const uint32_t mask = mod_mask(q_);
    std::vector<uint32_t> c(rows_, 0);
    for (size_t i = 0; i < rows_; ++i) {
        uint64_t s = 0;
        for (size_t j = 0; j < rows_; ++j) s += uint64_t(u_.at(i, j)) * b[j];
        c[i] = uint32_t(s) & mask;
    }
    std::vector<uint32_t> y(cols_, 0);
    for (size_t i = 0; i < rows_; ++i) {
        if (i < piv_val_.size()) {
            int v = piv_val_[i];
            if (valuation(c[i], q_) < v) return std::nullopt;
            y[i] = c[i] >> v;
        } else if (c[i] != 0) {
            return std::nullopt;
        }
    }
    std::vector<uint32_t> x(cols_, 0);
    for (size_t i = 0; i < cols_; ++i) {
        uint64_t s = 0;
        for (size_t j = 0; j < cols_; ++j) s += uint64_t(v_.at(i, j)) * y[j];
        x[i] = uint32_t(s) & mask;
    }
    return x;
}

std::vector<std::vector<uint32_t>> ZReduction::kernel() const {
    const uint32_t mask = mod_mask(q_);
    std::vector<std::vector<uint32_t>> gens;
    for (size_t p = 0; p < cols_; ++p) {
        uint32_t scale;
        if (p < piv_val_.size()) {
            if (piv_val_[p] == 0) continue;
            scale = uint32_t(1) << (q_ - piv_val_[p]);
        } else {
            scale = 1;
        }
        std::vector<uint32_t> g(cols_);
        for (size_t i = 0; i < cols_; ++i) g[i] = (v_.at(i, p) * scale) & mask;
        gens.push_back(std::move(g));
    }
    return gens;
}

}  // namespace cfikit
