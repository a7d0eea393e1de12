#include "flsentry/fixed_point.hpp"

#include <cmath>

namespace flsentry {

FixedPointCodec::FixedPointCodec(PrimeField field, int scale_bits)
    : field_(field), scale_bits_(scale_bits) {
    if (scale_bits_ < 1 || scale_bits_ > field_.bits() - 4) {
        throw RangeError("FixedPointCodec: scale_bits out of range for modulus");
    }
    const int headroom = field_.bits() - 2 - scale_bits_ - 1;
    max_abs_ = headroom >= 62 ? std::numeric_limits<std::int64_t>::max()
                              : (std::int64_t{1} << headroom);
}

std::uint64_t FixedPointCodec::quantize(double x) const {
    if (!std::isfinite(x)) throw RangeError("quantize: input is not finite");
    const double scaled = x * static_cast<double>(one());
    if (std::abs(scaled) >= static_cast<double>(max_abs_)) {
        throw RangeError("quantize: |x| too large for scale/modulus");
    }
    const auto v = std::llround(scaled); // ties away from zero
    return field_.encode_signed(v);
}

double FixedPointCodec::dequantize(std::uint64_t raw) const {
    const __int128 v = field_.decode_signed(raw);
    return static_cast<double>(static_cast<long double>(v) /
                               static_cast<long double>(one()));
}

std::vector<std::uint64_t> FixedPointCodec::quantize_vector(std::span<const double> xs) const {
    std::vector<std::uint64_t> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(quantize(x));
    return out;
}

std::vector<double> FixedPointCodec::dequantize_vector(std::span<const std::uint64_t> raws) const {
    std::vector<double> out;
    out.reserve(raws.size());
    for (std::uint64_t r : raws) out.push_back(dequantize(r));
    return out;
}

} // namespace flsentry
