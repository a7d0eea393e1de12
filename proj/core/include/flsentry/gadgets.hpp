#pragma once

#include <cstdint>

#include "flsentry/field.hpp"

namespace flsentry {

/// Probabilistic check that A*B == C: for each repetition draw a uniform
/// vector v and test A(Bv) == Cv. A wrong product survives one repetition
/// with probability at most 1/p. `mult_count`, when given, accumulates the
/// field multiplications a replay costs.
bool freivalds_check(const PrimeField& field, const FieldMatrix& a, const FieldMatrix& b,
                     const FieldMatrix& c, int reps, Rng& rng,
                     std::uint64_t* mult_count = nullptr);

/// Number of multiplications one freivalds_check replay performs.
std::uint64_t freivalds_cost(std::size_t n, std::size_t k, std::size_t m, int reps);

/// Integer division relation with prover-supplied quotient and remainder:
/// accept iff a == q*b + r and 0 <= r < b, checked over the integers.
bool division_check(const PrimeField& field, std::uint64_t a, std::uint64_t b, std::uint64_t q,
                    std::uint64_t r, std::uint64_t* mult_count = nullptr);

/// Floor square root relation: accept iff x^2 <= y and (x+1)^2 > y, which
/// pins x = floor(sqrt(y)) uniquely. The upper check is strict so that
/// perfect squares admit exactly one witness.
bool isqrt_check(const PrimeField& field, std::uint64_t y, std::uint64_t x,
                 std::uint64_t* mult_count = nullptr);

/// Exact floor(sqrt(y)) for the prover.
std::uint64_t isqrt_u64(std::uint64_t y);

} // namespace flsentry
