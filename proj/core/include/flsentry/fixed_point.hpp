#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flsentry/field.hpp"

namespace flsentry {

/// Maps reals into the prime field as round(x * 2^s) with negatives encoded
/// as p - |v|. The admissible magnitude keeps one squaring plus a small sum
/// inside the field, i.e. |round(x * 2^s)| < 2^(bits(p) - 2 - s - 1).
class FixedPointCodec {
public:
    FixedPointCodec(PrimeField field, int scale_bits);

    const PrimeField& field() const { return field_; }
    int scale_bits() const { return scale_bits_; }
    std::uint64_t one() const { return 1ULL << scale_bits_; }

    /// Round-half-away-from-zero encoding. Throws RangeError on overflow.
    std::uint64_t quantize(double x) const;
    double dequantize(std::uint64_t raw) const;

    std::vector<std::uint64_t> quantize_vector(std::span<const double> xs) const;
    std::vector<double> dequantize_vector(std::span<const std::uint64_t> raws) const;

    std::int64_t max_abs_encoded() const { return max_abs_; }

private:
    PrimeField field_;
    int scale_bits_;
    std::int64_t max_abs_;
};

} // namespace flsentry
