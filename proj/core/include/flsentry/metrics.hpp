#pragma once

#include <cstddef>
#include <set>
#include <span>

#include "flsentry/errors.hpp"

namespace flsentry {

/// Running confusion counts across rounds. n_total counts every malicious
/// submission whether or not it was caught, so missed detections lower the
/// modified PPV.
struct ConfusionTally {
    std::size_t n_tp = 0;    // malicious detected as malicious
    std::size_t n_fp = 0;    // benign detected as malicious
    std::size_t n_total = 0; // all malicious submissions across all rounds

    ConfusionTally& merge(const ConfusionTally& other) {
        n_tp += other.n_tp;
        n_fp += other.n_fp;
        n_total += other.n_total;
        return *this;
    }
};

/// PPV = n_tp / (n_tp + n_fp + n_total); bounded above by 1/2, with 1/2
/// meaning every malicious submission was caught with no false positives.
double modified_ppv(const ConfusionTally& tally);

/// Fraction of rounds whose predicted attack flag matches the ground truth.
double cross_round_success_rate(std::span<const std::pair<bool, bool>> flags);

/// Folds one round's removal set and ground-truth attacked set into the tally.
ConfusionTally accumulate(const std::set<int>& removed, const std::set<int>& attacked,
                          ConfusionTally tally);

} // namespace flsentry
