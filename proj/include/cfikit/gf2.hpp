#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/orbits.hpp"

namespace cfikit {

// Dense bit matrix, rows packed into 64-bit words.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(size_t rows, size_t cols);
    static BitMatrix identity(size_t n);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool get(size_t r, size_t c) const { return row(r)[c >> 6] >> (c & 63) & 1; }
    void set(size_t r, size_t c, bool v);
    void flip(size_t r, size_t c) { row(r)[c >> 6] ^= uint64_t(1) << (c & 63); }
    uint64_t* row(size_t r) { return &data_[r * words_]; }
    const uint64_t* row(size_t r) const { return &data_[r * words_]; }
    size_t words() const { return words_; }

    size_t rank() const;
    BitMatrix operator*(const BitMatrix& o) const;
    bool operator==(const BitMatrix& o) const;

    // columns of a row as hex, four columns per digit, first column in the high bit
    std::string row_hex(size_t r) const;
    void set_row_hex(size_t r, const std::string& hex);

private:
    size_t rows_ = 0, cols_ = 0, words_ = 0;
    std::vector<uint64_t> data_;
};

// F2 matrix over k-tuples of A (rows) and of B (columns).  Rows are
// stored as sorted column lists; the orbit partitions give the block grid.
class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(std::shared_ptr<const OrbitPartition> rows, std::shared_ptr<const OrbitPartition> cols);

    static BlockMatrix identity(std::shared_ptr<const OrbitPartition> rows,
                                std::shared_ptr<const OrbitPartition> cols);

    uint64_t nrows() const { return ptr_.size() - 1; }
    uint64_t ncols() const { return ncols_; }
    size_t nnz() const { return col_.size(); }
    std::span<const uint32_t> row(uint64_t r) const { return {col_.data() + ptr_[r], col_.data() + ptr_[r + 1]}; }
    bool get(uint64_t r, uint64_t c) const;

    const OrbitPartition& row_part() const { return *rows_; }
    const OrbitPartition& col_part() const { return *cols_; }
    std::shared_ptr<const OrbitPartition> row_part_ptr() const { return rows_; }
    std::shared_ptr<const OrbitPartition> col_part_ptr() const { return cols_; }

    BlockMatrix transpose() const;
    BlockMatrix with_row(uint64_t r, std::vector<uint32_t> cols) const;
    bool operator==(const BlockMatrix& o) const { return ptr_ == o.ptr_ && col_ == o.col_; }

    // hypothesis audit attached by the constructions
    std::string audit_status = "audited";
    nlohmann::json audit = nlohmann::json::object();

    friend class MatrixBuilder;

private:
    std::shared_ptr<const OrbitPartition> rows_, cols_;
    uint64_t ncols_ = 0;
    std::vector<uint64_t> ptr_{0};
    std::vector<uint32_t> col_;
};

// Accumulates entries with XOR semantics, one row at a time in row order.
class MatrixBuilder {
public:
    MatrixBuilder(std::shared_ptr<const OrbitPartition> rows, std::shared_ptr<const OrbitPartition> cols);
    void toggle(uint32_t c) { pending_.push_back(c); }
    void end_row();
    BlockMatrix finish();
    uint64_t current_row() const { return m_.ptr_.size() - 1; }

private:
    BlockMatrix m_;
    std::vector<uint32_t> pending_;
};

BlockMatrix multiply(const BlockMatrix& s, const BlockMatrix& t);
uint64_t rank(const BlockMatrix& m);
bool is_invertible(const BlockMatrix& m);

// characteristic matrix of a block of a 2k-orbit partition
BlockMatrix char_matrix(const OrbitPartition& two_k, size_t block, std::shared_ptr<const OrbitPartition> rows,
                        std::shared_ptr<const OrbitPartition> cols);

// for every block of a, the block of b with the same descriptor or -1
std::vector<int64_t> type_map(const OrbitPartition& a, const OrbitPartition& b);

struct PredicateReport {
    bool orbit_diagonal = true;
    bool orbit_invariant = true;
    bool odd_filled = true;
    std::string first_failure;
    bool all() const { return orbit_diagonal && orbit_invariant && odd_filled; }
    nlohmann::json to_json() const;
};

PredicateReport matrix_predicates(const BlockMatrix& s, const CfiStructure& a, const CirculationBasis& gens);

struct BlurWitness {
    size_t block;
    uint64_t u, v;
};

struct BlurVerdict {
    bool ok = false;
    bool invertible = false;
    std::optional<BlurWitness> witness;
    nlohmann::json to_json(const OrbitPartition& two_k) const;
};

// S k-blurs the twist: S invertible and chi^P S = S chi^{f(P)} for all P
BlurVerdict verify_blur(const BlockMatrix& s, const OrbitPartition& a2k, const OrbitPartition& b2k,
                        const std::vector<int64_t>& f, int k, bool invertibility_known = false);

nlohmann::json to_json(const BlockMatrix& m);
BlockMatrix matrix_from_json(const nlohmann::json& j, std::shared_ptr<const OrbitPartition> rows,
                             std::shared_ptr<const OrbitPartition> cols);

}  // namespace cfikit
