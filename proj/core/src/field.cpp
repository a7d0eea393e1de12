#include "flsentry/field.hpp"

namespace flsentry {

namespace {

bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % d == 0) return n == d;
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    auto mulmod = [](std::uint64_t a, std::uint64_t b, std::uint64_t m) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
    };
    auto powmod = [&](std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
        std::uint64_t result = 1;
        base %= m;
        while (exp > 0) {
            if (exp & 1) result = mulmod(result, base, m);
            base = mulmod(base, base, m);
            exp >>= 1;
        }
        return result;
    };
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

} // namespace

PrimeField::PrimeField(std::uint64_t modulus) : p_(modulus) {
    if (p_ >= (1ULL << 62)) {
        throw RangeError("PrimeField: modulus must be below 2^62");
    }
    if (!is_prime_u64(p_)) {
        throw RangeError("PrimeField: modulus " + std::to_string(p_) + " is not prime");
    }
    bits_ = 0;
    for (std::uint64_t v = p_; v > 0; v >>= 1) ++bits_;
}

std::uint64_t PrimeField::encode_signed(__int128 v) const {
    const auto half = static_cast<__int128>((p_ - 1) / 2);
    if (v > half || v < -half) {
        throw RangeError("PrimeField: signed value out of centered range");
    }
    if (v >= 0) return static_cast<std::uint64_t>(v);
    return p_ - static_cast<std::uint64_t>(-v);
}

std::uint64_t PrimeField::uniform(Rng& rng) const {
    const std::uint64_t mask = (bits_ >= 64) ? ~0ULL : ((1ULL << bits_) - 1);
    std::uint64_t x = rng.next_u64() & mask;
    while (x >= p_) x = rng.next_u64() & mask;
    return x;
}

FieldMatrix matmul(const PrimeField& field, const FieldMatrix& a, const FieldMatrix& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimension mismatch");
    FieldMatrix c = FieldMatrix::zero(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const std::uint64_t aik = a.at(i, k);
            if (aik == 0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                c.at(i, j) = field.add(c.at(i, j), field.mul(aik, b.at(k, j)));
            }
        }
    }
    return c;
}

} // namespace flsentry
