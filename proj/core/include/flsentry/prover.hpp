#pragma once

#include <map>
#include <vector>

#include "flsentry/defense.hpp"
#include "flsentry/fixed_point.hpp"
#include "flsentry/transcript.hpp"

namespace flsentry {

/// Quantized reference vectors carried across rounds. The aggregate reference
/// is the committed output of the previous round's transcript (the integer
/// average of the surviving quantized segments), so the commitment chain stays
/// exact instead of re-quantizing floating-point state.
struct ZkChainState {
    std::vector<std::uint64_t> prev_agg_q;
    std::map<int, std::vector<std::uint64_t>> prev_client_q;

    bool has_agg() const { return !prev_agg_q.empty(); }
};

struct ProveInputs {
    int round = 0;
    std::vector<int> client_ids;                // ascending
    std::vector<std::vector<double>> segments;  // aligned with client_ids
    ZkChainState chain;
    DefenseParams params;
    ZkParams zk;
};

/// Server-side transcript generation. Re-runs both detection stages in
/// fixed-point field arithmetic, records every gadget (Freivalds product
/// check, quotient/remainder divisions, floor-sqrt witnesses, threshold
/// comparisons) in replay order, and tallies the multiplication cost per
/// stage. Throws ProverInconsistencyError if the fixed-point decisions
/// disagree with the claimed report outside the marginal-comparison band.
VerificationTranscript prove_detection(const ProveInputs& inputs, const DetectionReport& report);

/// Chain state for the next round: the transcript's committed survivor
/// average plus the surviving clients' committed update vectors. When the
/// round removed everyone the previous aggregate is retained and the
/// per-client history is cleared.
ZkChainState advance_chain(const VerificationTranscript& transcript, const ZkChainState& current);

} // namespace flsentry
