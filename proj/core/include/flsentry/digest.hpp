#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flsentry {

/// SHA-256 over arbitrary bytes, returned as lowercase hex.
std::string sha256_hex(std::span<const unsigned char> bytes);

/// Commitment to a committed field vector: SHA-256 over the canonical
/// little-endian encoding of (modulus, scale_bits, length, raw values).
std::string commit_vector(std::uint64_t modulus, int scale_bits,
                          std::span<const std::uint64_t> raw_values);

} // namespace flsentry
