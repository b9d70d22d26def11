#include "cfikit/gf2.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cfikit/error.hpp"

namespace cfikit {

BitMatrix::BitMatrix(size_t rows, size_t cols)
    : rows_(rows), cols_(cols), words_((cols + 63) / 64), data_(rows * words_, 0) {}

BitMatrix BitMatrix::identity(size_t n) {
    BitMatrix m(n, n);
    for (size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
}

void BitMatrix::set(size_t r, size_t c, bool v) {
    uint64_t bit = uint64_t(1) << (c & 63);
    if (v)
        row(r)[c >> 6] |= bit;
    else
        row(r)[c >> 6] &= ~bit;
}

size_t BitMatrix::rank() const {
    BitMatrix m = *this;
    size_t r = 0;
    for (size_t c = 0; c < cols_ && r < rows_; ++c) {
        size_t w = c >> 6;
        uint64_t bit = uint64_t(1) << (c & 63);
        size_t p = r;
        while (p < rows_ && !(m.row(p)[w] & bit)) ++p;
        if (p == rows_) continue;
        if (p != r) std::swap_ranges(m.row(p), m.row(p) + words_, m.row(r));
        for (size_t i = r + 1; i < rows_; ++i)
            if (m.row(i)[w] & bit)
                for (size_t j = w; j < words_; ++j) m.row(i)[j] ^= m.row(r)[j];
        ++r;
    }
    return r;
}

BitMatrix BitMatrix::operator*(const BitMatrix& o) const {
    if (cols_ != o.rows_) throw ArgumentError("bit matrix shapes do not match");
    BitMatrix out(rows_, o.cols_);
    for (size_t i = 0; i < rows_; ++i)
        for (size_t k = 0; k < cols_; ++k)
            if (get(i, k))
                for (size_t j = 0; j < o.words_; ++j) out.row(i)[j] ^= o.row(k)[j];
    return out;
}

bool BitMatrix::operator==(const BitMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
}

std::string BitMatrix::row_hex(size_t r) const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (size_t c = 0; c < cols_; c += 4) {
        int d = 0;
        for (size_t b = 0; b < 4; ++b) d = d << 1 | ((c + b < cols_ && get(r, c + b)) ? 1 : 0);
        s.push_back(digits[d]);
    }
    return s;
}

void BitMatrix::set_row_hex(size_t r, const std::string& hex) {
    if (hex.size() != (cols_ + 3) / 4) throw DecodeError("hex row has wrong length");
    for (size_t i = 0; i < hex.size(); ++i) {
        char ch = hex[i];
        int d;
        if (ch >= '0' && ch <= '9')
            d = ch - '0';
        else if (ch >= 'a' && ch <= 'f')
            d = ch - 'a' + 10;
        else
            throw DecodeError("bad hex digit");
        for (size_t b = 0; b < 4; ++b) {
            bool bit = d >> (3 - b) & 1;
            size_t c = 4 * i + b;
            if (c >= cols_) {
                if (bit) throw DecodeError("padding bits must be zero");
                continue;
            }
            set(r, c, bit);
        }
    }
}

BlockMatrix::BlockMatrix(std::shared_ptr<const OrbitPartition> rows, std::shared_ptr<const OrbitPartition> cols)
    : rows_(std::move(rows)), cols_(std::move(cols)) {
    ncols_ = cols_->space.size();
}

BlockMatrix BlockMatrix::identity(std::shared_ptr<const OrbitPartition> rows,
                                  std::shared_ptr<const OrbitPartition> cols) {
    if (rows->space.size() != cols->space.size()) throw ArgumentError("identity needs a square index");
    MatrixBuilder b(rows, cols);
    for (uint64_t r = 0; r < rows->space.size(); ++r) {
        b.toggle(uint32_t(r));
        b.end_row();
    }
    return b.finish();
}

bool BlockMatrix::get(uint64_t r, uint64_t c) const {
    auto rw = row(r);
    return std::binary_search(rw.begin(), rw.end(), uint32_t(c));
}

BlockMatrix BlockMatrix::transpose() const {
    BlockMatrix t(cols_, rows_);
    std::vector<uint64_t> count(ncols_ + 1, 0);
    for (uint32_t c : col_) ++count[c + 1];
    for (uint64_t c = 0; c < ncols_; ++c) count[c + 1] += count[c];
    t.ptr_ = count;
    t.col_.resize(col_.size());
    std::vector<uint64_t> fill(count.begin(), count.end() - 1);
    for (uint64_t r = 0; r < nrows(); ++r)
        for (uint32_t c : row(r)) t.col_[fill[c]++] = uint32_t(r);
    t.ncols_ = nrows();
    t.audit_status = audit_status;
    return t;
}

BlockMatrix BlockMatrix::with_row(uint64_t r, std::vector<uint32_t> cols) const {
    MatrixBuilder b(rows_, cols_);
    for (uint64_t i = 0; i < nrows(); ++i) {
        if (i == r)
            for (uint32_t c : cols) b.toggle(c);
        else
            for (uint32_t c : row(i)) b.toggle(c);
        b.end_row();
    }
    BlockMatrix m = b.finish();
    m.audit_status = audit_status;
    m.audit = audit;
    return m;
}

MatrixBuilder::MatrixBuilder(std::shared_ptr<const OrbitPartition> rows, std::shared_ptr<const OrbitPartition> cols)
    : m_(std::move(rows), std::move(cols)) {}

void MatrixBuilder::end_row() {
    std::sort(pending_.begin(), pending_.end());
    for (size_t i = 0; i < pending_.size();) {
        size_t j = i;
        while (j < pending_.size() && pending_[j] == pending_[i]) ++j;
        if ((j - i) & 1) {
            if (pending_[i] >= m_.ncols_) throw ArgumentError("column index out of range");
            m_.col_.push_back(pending_[i]);
        }
        i = j;
    }
    pending_.clear();
    m_.ptr_.push_back(m_.col_.size());
}

BlockMatrix MatrixBuilder::finish() {
    if (m_.ptr_.size() - 1 != m_.rows_->space.size()) throw ArgumentError("matrix has wrong number of rows");
    return std::move(m_);
}

BlockMatrix multiply(const BlockMatrix& s, const BlockMatrix& t) {
    if (s.ncols() != t.nrows()) throw ArgumentError("inner index sets differ");
    MatrixBuilder b(s.row_part_ptr(), t.col_part_ptr());
    std::vector<uint8_t> parity(t.ncols(), 0);
    std::vector<uint32_t> touched;
    for (uint64_t r = 0; r < s.nrows(); ++r) {
        for (uint32_t w : s.row(r))
            for (uint32_t c : t.row(w)) {
                // bit 1 marks the column as already listed
                if (!parity[c]) touched.push_back(c);
                parity[c] = uint8_t((parity[c] ^ 1) | 2);
            }
        for (uint32_t c : touched) {
            if (parity[c] & 1) b.toggle(c);
            parity[c] = 0;
        }
        touched.clear();
        b.end_row();
    }
    BlockMatrix m = b.finish();
    m.audit_status = (s.audit_status == "audited" && t.audit_status == "audited") ? "audited" : "unaudited";
    return m;
}

uint64_t rank(const BlockMatrix& m) {
    const uint64_t R = m.nrows(), C = m.ncols();
    // rows and columns joined by a nonzero entry share a component
    std::vector<uint64_t> parent(R + C);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](uint64_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (uint64_t r = 0; r < R; ++r)
        for (uint32_t c : m.row(r)) {
            uint64_t a = find(r), b = find(R + c);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    std::map<uint64_t, std::pair<std::vector<uint64_t>, std::vector<uint64_t>>> comps;
    for (uint64_t r = 0; r < R; ++r)
        if (!m.row(r).empty()) comps[find(r)].first.push_back(r);
    for (uint64_t c = 0; c < C; ++c) comps[find(R + c)].second.push_back(c);
    uint64_t total = 0;
    std::vector<uint32_t> local(C, 0);
    for (auto& [root, rc] : comps) {
        auto& [rows, cols] = rc;
        if (rows.empty()) continue;
        if (double(rows.size()) * double(cols.size()) > 8e9) throw ResourceError("rank component too large");
        for (size_t i = 0; i < cols.size(); ++i) local[cols[i]] = uint32_t(i);
        BitMatrix d(rows.size(), cols.size());
        for (size_t i = 0; i < rows.size(); ++i)
            for (uint32_t c : m.row(rows[i])) d.set(i, local[c], true);
        total += d.rank();
    }
    return total;
}

bool is_invertible(const BlockMatrix& m) { return m.nrows() == m.ncols() && rank(m) == m.nrows(); }

BlockMatrix char_matrix(const OrbitPartition& two_k, size_t block, std::shared_ptr<const OrbitPartition> rows,
                        std::shared_ptr<const OrbitPartition> cols) {
    const uint64_t nk = rows->space.size();
    if (two_k.space.size() != nk * cols->space.size()) throw ArgumentError("2k-orbit does not match the index");
    MatrixBuilder b(rows, cols);
    auto mem = two_k.block(block);
    size_t i = 0;
    for (uint64_t r = 0; r < nk; ++r) {
        while (i < mem.size() && mem[i] / nk == r) b.toggle(uint32_t(mem[i++] % nk));
        b.end_row();
    }
    return b.finish();
}

std::vector<int64_t> type_map(const OrbitPartition& a, const OrbitPartition& b) {
    std::map<TypeDescriptor, int64_t> index;
    for (size_t j = 0; j < b.num_blocks(); ++j) index.emplace(b.types[j], int64_t(j));
    std::vector<int64_t> f(a.num_blocks(), -1);
    for (size_t i = 0; i < a.num_blocks(); ++i) {
        auto it = index.find(a.types[i]);
        if (it != index.end()) f[i] = it->second;
    }
    return f;
}

nlohmann::json PredicateReport::to_json() const {
    return {{"orbit_diagonal", orbit_diagonal},
            {"orbit_invariant", orbit_invariant},
            {"odd_filled", odd_filled},
            {"first_failure", first_failure}};
}

namespace {

uint64_t map_tuple(uint64_t t, const std::vector<int>& img, const TupleSpace& sp) {
    uint64_t out = 0, scale = 1;
    for (int i = 0; i < sp.k; ++i) {
        out += uint64_t(img[t % sp.n]) * scale;
        t /= sp.n;
        scale *= sp.n;
    }
    return out;
}

}  // namespace

PredicateReport matrix_predicates(const BlockMatrix& s, const CfiStructure& a, const CirculationBasis& gens) {
    PredicateReport rep;
    const auto& rp = s.row_part();
    const auto& cp = s.col_part();
    auto f = type_map(rp, cp);
    std::vector<char> block_hit(rp.num_blocks(), 0);
    for (uint64_t r = 0; r < s.nrows() && rep.orbit_diagonal; ++r)
        for (uint32_t c : s.row(r)) {
            int64_t want = f[rp.block_of[r]];
            if (want != int64_t(cp.block_of[c])) {
                rep.orbit_diagonal = false;
                rep.first_failure = "nonzero entry between orbits of different type at row " + std::to_string(r);
                break;
            }
            block_hit[rp.block_of[r]] = 1;
        }
    if (rep.orbit_diagonal)
        for (size_t b = 0; b < rp.num_blocks(); ++b)
            if (f[b] >= 0 && !block_hit[b]) {
                rep.orbit_diagonal = false;
                rep.first_failure = "zero block between orbits of equal type, row block " + std::to_string(b);
                break;
            }

    for (auto& g : gens.gens) {
        if (!rep.orbit_invariant) break;
        auto img = vertex_permutation(a, circulation_map(a.base(), a.q(), g));
        for (uint64_t r = 0; r < s.nrows() && rep.orbit_invariant; ++r) {
            uint64_t r2 = map_tuple(r, img, rp.space);
            for (uint32_t c : s.row(r))
                if (!s.get(r2, map_tuple(c, img, cp.space))) {
                    rep.orbit_invariant = false;
                    if (rep.first_failure.empty())
                        rep.first_failure = "entry not invariant under an automorphism at row " + std::to_string(r);
                    break;
                }
        }
    }

    for (uint64_t r = 0; r < s.nrows(); ++r)
        if (s.row(r).size() % 2 == 0) {
            rep.odd_filled = false;
            if (rep.first_failure.empty()) rep.first_failure = "row " + std::to_string(r) + " has even weight";
            break;
        }
    return rep;
}

nlohmann::json BlurVerdict::to_json(const OrbitPartition& two_k) const {
    nlohmann::json j{{"blurs", ok}, {"invertible", invertible}};
    if (witness) {
        TupleSpace half(two_k.space.n, two_k.k / 2);
        j["witness"] = {{"block", witness->block},
                        {"u", half.decode(witness->u)},
                        {"v", half.decode(witness->v)}};
    }
    return j;
}

BlurVerdict verify_blur(const BlockMatrix& s, const OrbitPartition& a2k, const OrbitPartition& b2k,
                        const std::vector<int64_t>& f, int k, bool invertibility_known) {
    if (a2k.k != 2 * k || b2k.k != 2 * k) throw ArgumentError("partitions must have arity 2k");
    if (f.size() != a2k.num_blocks() || a2k.num_blocks() != b2k.num_blocks())
        throw ArgumentError("block map has wrong size");
    std::vector<char> used(b2k.num_blocks(), 0);
    for (size_t p = 0; p < f.size(); ++p) {
        if (f[p] < 0 || size_t(f[p]) >= b2k.num_blocks() || used[f[p]]++)
            throw ArgumentError("block map is not a bijection");
        if (!(a2k.types[p] == b2k.types[f[p]])) throw ArgumentError("block map does not preserve types");
    }
    BlurVerdict v;
    v.invertible = invertibility_known || is_invertible(s);
    if (!v.invertible) return v;

    const uint64_t nk = s.nrows();
    BlockMatrix st = s.transpose();
    std::vector<uint8_t> left(nk, 0), right(nk, 0);
    std::vector<uint32_t> touched;
    // start of the run of Q members with first half w
    std::vector<int64_t> q_begin(nk, -1), q_end(nk, -1);
    std::vector<uint32_t> rows;

    for (size_t p = 0; p < f.size(); ++p) {
        auto pm = a2k.block(p);
        auto qm = b2k.block(size_t(f[p]));
        std::vector<uint32_t> q_firsts;
        for (size_t i = 0; i < qm.size();) {
            uint64_t w = qm[i] / nk;
            size_t j = i;
            while (j < qm.size() && qm[j] / nk == w) ++j;
            q_begin[w] = int64_t(i);
            q_end[w] = int64_t(j);
            q_firsts.push_back(uint32_t(w));
            i = j;
        }
        rows.clear();
        for (uint32_t t : pm) rows.push_back(uint32_t(t / nk));
        for (uint32_t w : q_firsts)
            for (uint32_t u : st.row(w)) rows.push_back(u);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

        for (uint32_t u : rows) {
            // (chi^P S)_u
            auto lo = std::lower_bound(pm.begin(), pm.end(), uint32_t(uint64_t(u) * nk));
            for (auto it = lo; it != pm.end() && *it / nk == u; ++it)
                for (uint32_t c : s.row(*it % nk)) {
                    if (!left[c] && !right[c]) touched.push_back(c);
                    left[c] ^= 1;
                    left[c] |= 2;
                }
            // (S chi^Q)_u
            for (uint32_t w : s.row(u)) {
                if (q_begin[w] < 0) continue;
                for (int64_t i = q_begin[w]; i < q_end[w]; ++i) {
                    uint32_t c = uint32_t(qm[i] % nk);
                    if (!left[c] && !right[c]) touched.push_back(c);
                    right[c] ^= 1;
                    right[c] |= 2;
                }
            }
            std::sort(touched.begin(), touched.end());
            for (uint32_t c : touched) {
                if (!v.witness && (left[c] & 1) != (right[c] & 1)) v.witness = BlurWitness{p, u, c};
                left[c] = right[c] = 0;
            }
            touched.clear();
            if (v.witness) break;
        }
        for (uint32_t w : q_firsts) q_begin[w] = q_end[w] = -1;
        if (v.witness) return v;
    }
    v.ok = true;
    return v;
}

nlohmann::json to_json(const BlockMatrix& m) {
    const auto& rp = m.row_part();
    const auto& cp = m.col_part();
    std::map<std::pair<uint32_t, uint32_t>, char> present;
    for (uint64_t r = 0; r < m.nrows(); ++r)
        for (uint32_t c : m.row(r)) present[{rp.block_of[r], cp.block_of[c]}] = 1;
    nlohmann::json blocks = nlohmann::json::array();
    std::vector<uint32_t> local(m.ncols(), 0);
    for (auto& [pq, _] : present) {
        auto rows = rp.block(pq.first);
        auto cols = cp.block(pq.second);
        for (size_t i = 0; i < cols.size(); ++i) local[cols[i]] = uint32_t(i);
        BitMatrix d(rows.size(), cols.size());
        for (size_t i = 0; i < rows.size(); ++i)
            for (uint32_t c : m.row(rows[i]))
                if (cp.block_of[c] == pq.second) d.set(i, local[c], true);
        nlohmann::json bits = nlohmann::json::array();
        for (size_t i = 0; i < rows.size(); ++i) bits.push_back(d.row_hex(i));
        blocks.push_back({{"row_block", pq.first},
                          {"col_block", pq.second},
                          {"rows", std::vector<uint32_t>(rows.begin(), rows.end())},
                          {"cols", std::vector<uint32_t>(cols.begin(), cols.end())},
                          {"bits", bits}});
    }
    return {{"format", "blockmatrix"},
            {"k", rp.k},
            {"nrows", m.nrows()},
            {"ncols", m.ncols()},
            {"audit_status", m.audit_status},
            {"audit", m.audit},
            {"blocks", blocks}};
}

BlockMatrix matrix_from_json(const nlohmann::json& j, std::shared_ptr<const OrbitPartition> rows,
                             std::shared_ptr<const OrbitPartition> cols) {
    try {
        if (j.at("format") != "blockmatrix") throw DecodeError("not a block matrix document");
        if (j.at("nrows").get<uint64_t>() != rows->space.size() || j.at("ncols").get<uint64_t>() != cols->space.size())
            throw DecodeError("matrix dimensions do not match the partitions");
        std::vector<std::vector<uint32_t>> entries(rows->space.size());
        for (auto& blk : j.at("blocks")) {
            size_t rb = blk.at("row_block").get<size_t>(), cb = blk.at("col_block").get<size_t>();
            if (rb >= rows->num_blocks() || cb >= cols->num_blocks()) throw DecodeError("block id out of range");
            auto rlist = blk.at("rows").get<std::vector<uint32_t>>();
            auto clist = blk.at("cols").get<std::vector<uint32_t>>();
            auto rm = rows->block(rb);
            auto cm = cols->block(cb);
            if (!std::equal(rlist.begin(), rlist.end(), rm.begin(), rm.end()) ||
                !std::equal(clist.begin(), clist.end(), cm.begin(), cm.end()))
                throw DecodeError("block index lists do not match the partitions");
            auto& bits = blk.at("bits");
            if (bits.size() != rlist.size()) throw DecodeError("block has wrong number of rows");
            BitMatrix d(rlist.size(), clist.size());
            for (size_t i = 0; i < rlist.size(); ++i) {
                d.set_row_hex(i, bits[i].get<std::string>());
                for (size_t c = 0; c < clist.size(); ++c)
                    if (d.get(i, c)) entries[rlist[i]].push_back(clist[c]);
            }
        }
        MatrixBuilder b(rows, cols);
        for (auto& e : entries) {
            for (uint32_t c : e) b.toggle(c);
            b.end_row();
        }
        BlockMatrix m = b.finish();
        m.audit_status = j.at("audit_status").get<std::string>();
        m.audit = j.at("audit");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("matrix json: ") + e.what());
    }
}

}  // namespace cfikit
