#pragma once

#include <cstdint>
#include <vector>

#include "flsentry/errors.hpp"
#include "flsentry/rng.hpp"

namespace flsentry {

/// Prime field with a runtime modulus below 2^62 (products fit in 128-bit
/// intermediates). Defaults to the Mersenne prime 2^61 - 1, which keeps every
/// committed integer exact. Elements are raw uint64 residues in [0, p);
/// signed quantities use the centered encoding (values above (p-1)/2 are
/// negative).
class PrimeField {
public:
    static constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;

    explicit PrimeField(std::uint64_t modulus = kMersenne61);

    std::uint64_t modulus() const { return p_; }
    int bits() const { return bits_; }

    std::uint64_t reduce(std::uint64_t v) const { return v % p_; }
    std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
        const std::uint64_t s = a + b; // p < 2^62, no overflow
        return s >= p_ ? s - p_ : s;
    }
    std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
        return a >= b ? a - b : a + p_ - b;
    }
    std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : p_ - a; }
    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % p_);
    }

    /// Centered signed encoding. |v| must stay below (p-1)/2.
    std::uint64_t encode_signed(__int128 v) const;
    __int128 decode_signed(std::uint64_t raw) const {
        return raw <= (p_ - 1) / 2 ? static_cast<__int128>(raw)
                                   : static_cast<__int128>(raw) - static_cast<__int128>(p_);
    }

    /// Uniform element in [0, p) by rejection on the modulus bit width.
    std::uint64_t uniform(Rng& rng) const;

private:
    std::uint64_t p_;
    int bits_;
};

/// Dense row-major matrix of field elements.
struct FieldMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> data;

    static FieldMatrix zero(std::size_t rows, std::size_t cols) {
        return FieldMatrix{rows, cols, std::vector<std::uint64_t>(rows * cols, 0)};
    }
    std::uint64_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::uint64_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// C = A * B computed directly (prover-side helper).
FieldMatrix matmul(const PrimeField& field, const FieldMatrix& a, const FieldMatrix& b);

} // namespace flsentry
