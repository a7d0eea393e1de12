#pragma once

#include <map>
#include <set>
#include <string>

#include "flsentry/defense.hpp"
#include "flsentry/rng.hpp"
#include "flsentry/transcript.hpp"

namespace flsentry {

/// What a verifying client already knows before replaying a round: the digest
/// of its own (and its peers') submitted segments, the commitments published
/// by the previous round's transcript, the protocol parameters, and the
/// report the server announced.
struct PublicInputs {
    std::map<int, std::string> expected_update_commitments;
    std::string prev_agg_commitment; // empty when no aggregate exists yet
    std::map<int, std::string> prev_client_commitments;
    DefenseParams params;
    ZkParams zk;
    bool claimed_attack_flag = false;
    std::set<int> claimed_removed;
};

struct VerifyResult {
    bool accepted = false;
    std::string reason;       // first failure, empty on accept
    int failing_record = -1;  // index into transcript.records, -1 if none
    bool marginal = false;    // some comparison sat within the marginal band
    std::set<int> fixed_removed; // removal set implied by fixed-point replay
    std::uint64_t replayed_mults = 0;
};

/// Client-side replay: re-hash the revealed vectors against the commitment
/// table and the previous round's published digests, replay every gadget
/// record in order (recomputing each claim exactly), re-derive the removal
/// set from the verified comparisons, and accept only if everything matches
/// the claimed report. Freivalds products are checked with the verifier's own
/// randomness.
VerifyResult verify_detection(const VerificationTranscript& transcript,
                              const PublicInputs& public_inputs, Rng& rng);

/// Commitment view of the next round's public inputs after an accepted
/// transcript (survivor average + surviving update digests).
void advance_public(const VerificationTranscript& transcript, PublicInputs& public_inputs);

} // namespace flsentry
