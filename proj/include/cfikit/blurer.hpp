#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

namespace cfikit {

using Vec = std::vector<uint32_t>;

struct Blurer {
    int k = 1;
    int q = 1;
    uint32_t a = 0;
    int d = 0;
    std::vector<Vec> xi;  // sorted, no repeats
    std::vector<std::string> provenance;

    Vec fix() const;  // (a, 0, ..., 0)
    nlohmann::json to_json() const;
    static Blurer from_json(const nlohmann::json& j);
};

int count_vects(const std::vector<Vec>& xi, const std::vector<int>& n, const Vec& b);

struct BlurerCheck {
    bool ok = true;
    std::string condition;  // which defining condition failed
    std::vector<int> n;
    Vec b;
    nlohmann::json to_json() const;
};

BlurerCheck verify_blurer(const Blurer& b);

Blurer arity1_blurer(int q, int d);
Blurer kary_blurer(int i);

Blurer pad(const Blurer& b, int d);
Blurer restrict_k(const Blurer& b, int k);
Blurer scale(const Blurer& b, uint32_t c);
Blurer embed(const Blurer& b, int l);
// lifts into Z_{2^{q+l}}; c = 0 picks the default multiplier, falling back
// to other odd multipliers when the default is not a unit
Blurer larger_field(const Blurer& b, int l, uint32_t c = 0);

Blurer blurer_for(int k, int q, uint32_t target, int d, uint64_t search_budget = uint64_t(1) << 16);
std::optional<Blurer> search_blurer(int k, int q, uint32_t a, int d, uint64_t budget = uint64_t(1) << 16);

bool blurer_sum_check(const Blurer& b, const std::vector<int>& K, const std::function<int(const Vec&)>& f);

// bound functions of the arity-k construction
int bound_i(int k);       // 2^{i-1}-1 < k <= 2^i-1
int bound_r(int k);
int bound_theta(int k);
int bound_q(int k);
int bound_d(int k, int m);

boost::multiprecision::cpp_int binomial(unsigned n, unsigned m);
bool binomial_is_odd(unsigned n, unsigned m);  // by Lucas' theorem

}  // namespace cfikit
