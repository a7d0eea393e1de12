#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flsentry/field.hpp"

namespace flsentry {

struct ZkParams {
    std::uint64_t modulus = PrimeField::kMersenne61;
    int scale_bits = 16;
    int freivalds_reps = 2;
    int marginal_ulps = 16; // comparisons closer than this flag the round

    void validate() const;
};

/// One replayable step. The verifier recomputes every claim from the revealed
/// vectors and earlier records, so any tampered field is caught exactly.
///
/// kinds and payload layout:
///   dot          vec_refs={a,b}          scalars={claimed}
///   norm_sq      vec_refs={a}            scalars={claimed}
///   diff_norm_sq vec_refs={a,b}          scalars={claimed}
///   isqrt        scalars={y, x}
///   division     scalars={a, b, q, r}
///   freivalds    vec_refs=row vectors    aux=claimed product, row-major
///   sum_sq_dev   scalars={claimed}
///   comparison   scalars={lhs, rhs, mode(0=lt,1=gt)}  flag=outcome
///   mux          vec_refs={fallback[,cached]}         flag=use_fallback
///   average      vec_refs={out}  ids=members  scalars={divisor}  aux=remainders
struct GadgetRecord {
    std::string kind;
    std::string label;
    std::vector<std::string> vec_refs;
    std::vector<std::uint64_t> scalars;
    std::vector<std::uint64_t> aux;
    std::vector<int> ids;
    bool flag = false;
};

/// Commit-and-replay transcript for one detection round. Committed vectors
/// are revealed (the verifier re-hashes them against the commitment table and
/// against the previous round's published digests), gadget records replay in
/// order, and the multiplication tallies account for the arithmetic the
/// relation set costs.
struct VerificationTranscript {
    int version = 1;
    std::string digest_algorithm = "sha256";
    std::uint64_t modulus = PrimeField::kMersenne61;
    int scale_bits = 16;
    int freivalds_reps = 2;
    int marginal_ulps = 16;
    int round = 0;
    std::vector<int> client_ids;

    std::vector<std::pair<std::string, std::string>> commitments; // (name, hex digest)
    std::map<std::string, std::vector<std::uint64_t>> vectors;    // revealed values

    std::vector<GadgetRecord> records;

    bool claimed_attack_flag = false;
    std::set<int> claimed_removed;
    bool marginal = false;

    std::uint64_t mult_count_stage1 = 0;
    std::uint64_t mult_count_stage2 = 0;
    std::uint64_t mult_count = 0;

    std::string commitment_for(const std::string& name) const;
};

std::string transcript_to_json(const VerificationTranscript& transcript);
VerificationTranscript transcript_from_json(const std::string& text);

/// Committed-vector naming scheme used by the prover and verifier.
namespace vec_name {
std::string update(int client_id);
std::string ref_client(int client_id);
inline const char* ref_agg() { return "ref/agg"; }
inline const char* krum_avg() { return "krum/avg"; }
inline const char* out_agg() { return "out/agg"; }
inline const char* stage2_ref() { return "stage2/ref"; }
} // namespace vec_name

} // namespace flsentry
