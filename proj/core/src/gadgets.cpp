#include "flsentry/gadgets.hpp"

#include <cmath>

namespace flsentry {

std::uint64_t freivalds_cost(std::size_t n, std::size_t k, std::size_t m, int reps) {
    return static_cast<std::uint64_t>(reps) * (k * m + n * k + n * m);
}

bool freivalds_check(const PrimeField& field, const FieldMatrix& a, const FieldMatrix& b,
                     const FieldMatrix& c, int reps, Rng& rng, std::uint64_t* mult_count) {
    if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
        throw DimensionError("freivalds_check: inconsistent dimensions");
    }
    if (mult_count != nullptr) {
        *mult_count += freivalds_cost(a.rows, a.cols, b.cols, reps);
    }
    std::vector<std::uint64_t> v(b.cols), bv(b.rows), abv(a.rows), cv(c.rows);
    for (int rep = 0; rep < reps; ++rep) {
        for (auto& x : v) x = field.uniform(rng);
        for (std::size_t i = 0; i < b.rows; ++i) {
            std::uint64_t acc = 0;
            for (std::size_t j = 0; j < b.cols; ++j) acc = field.add(acc, field.mul(b.at(i, j), v[j]));
            bv[i] = acc;
        }
        for (std::size_t i = 0; i < a.rows; ++i) {
            std::uint64_t acc = 0;
            for (std::size_t j = 0; j < a.cols; ++j) acc = field.add(acc, field.mul(a.at(i, j), bv[j]));
            abv[i] = acc;
        }
        for (std::size_t i = 0; i < c.rows; ++i) {
            std::uint64_t acc = 0;
            for (std::size_t j = 0; j < c.cols; ++j) acc = field.add(acc, field.mul(c.at(i, j), v[j]));
            cv[i] = acc;
        }
        if (abv != cv) return false;
    }
    return true;
}

bool division_check(const PrimeField& field, std::uint64_t a, std::uint64_t b, std::uint64_t q,
                    std::uint64_t r, std::uint64_t* mult_count) {
    if (mult_count != nullptr) *mult_count += 1;
    if (a >= field.modulus() || b >= field.modulus() || q >= field.modulus() ||
        r >= field.modulus()) {
        return false;
    }
    if (b == 0 || r >= b) return false;
    const unsigned __int128 lhs = a;
    const unsigned __int128 rhs = static_cast<unsigned __int128>(q) * b + r;
    return lhs == rhs;
}

bool isqrt_check(const PrimeField& field, std::uint64_t y, std::uint64_t x,
                 std::uint64_t* mult_count) {
    if (mult_count != nullptr) *mult_count += 2;
    if (y >= field.modulus() || x >= field.modulus()) return false;
    const unsigned __int128 sq = static_cast<unsigned __int128>(x) * x;
    const unsigned __int128 next_sq = static_cast<unsigned __int128>(x + 1) * (x + 1);
    return sq <= y && next_sq > y;
}

std::uint64_t isqrt_u64(std::uint64_t y) {
    if (y == 0) return 0;
    auto x = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(y)));
    while (x > 0 && static_cast<unsigned __int128>(x) * x > y) --x;
    while (static_cast<unsigned __int128>(x + 1) * (x + 1) <= y) ++x;
    return x;
}

} // namespace flsentry
